/**
 * DOM layer: candidate gallery, branch controls, collapsible lineage
 * tree, breadcrumb, dismissible error banners, and the canvas mask
 * editor. Rendering is a pure function of the store state plus the
 * mask-editor overlay; no candidate data is cached client-side beyond
 * image URLs (which are immutable per candidate).
 */

import { ApiClient } from "./api.js";
import { MaskEditor } from "./mask.js";
import { StudioStore, CONTROL_LIMITS } from "./state.js";
import { LineageNode } from "./api.js";

export class StudioUi {
  private collapsed = new Set<string>();
  private maskEditor: MaskEditor | null = null;
  private maskCanvas: HTMLCanvasElement | null = null;
  private brushMode: "brush" | "rect" = "brush";
  private rectStart: [number, number] | null = null;

  constructor(
    private root: HTMLElement,
    private store: StudioStore,
    private api: ApiClient,
    private imageSize: [number, number],
  ) {
    store.subscribe(() => this.render());
  }

  render(): void {
    const state = this.store.getState();
    this.root.innerHTML = "";
    this.root.appendChild(this.renderBanner(state.error));
    const layout = el("div", "layout");
    layout.appendChild(this.renderControls());
    layout.appendChild(this.renderGallery());
    layout.appendChild(this.renderTree());
    this.root.appendChild(layout);
    if (this.maskEditor) this.root.appendChild(this.renderMaskOverlay());
  }

  private renderBanner(error: string | null): HTMLElement {
    const banner = el("div", "banner");
    if (!error) {
      banner.style.display = "none";
      return banner;
    }
    banner.textContent = error;
    const dismiss = el("button", "dismiss", "dismiss");
    dismiss.onclick = () => this.store.dismissError();
    banner.appendChild(dismiss);
    return banner;
  }

  private renderControls(): HTMLElement {
    const state = this.store.getState();
    const panel = el("div", "controls");

    const newSession = el("button", "", "new session (synthesize)");
    newSession.onclick = () =>
      void this.store.createSession({ source: "synthesize" });
    panel.appendChild(newSession);

    const beta = labeledSlider(
      "noise level",
      state.controls.beta,
      CONTROL_LIMITS.beta.min,
      CONTROL_LIMITS.beta.max,
      0.01,
      (v) => this.store.setControls({ ...state.controls, beta: v }),
    );
    const steps = labeledNumber("steps", state.controls.steps, (v) =>
      this.store.setControls({ ...state.controls, steps: v }),
    );
    const count = labeledNumber("candidates", state.controls.n, (v) =>
      this.store.setControls({ ...state.controls, n: v }),
    );
    panel.append(beta, steps, count);

    const branch = el("button", "branch", "branch selected");
    const pending =
      state.selectedId !== null && state.pendingParents.has(state.selectedId);
    branch.toggleAttribute("disabled", !state.selectedId || pending);
    branch.textContent = pending ? "generating..." : "branch selected";
    branch.onclick = () => void this.store.branchSelected();
    panel.appendChild(branch);

    const maskBtn = el("button", "", "paint inpaint mask");
    maskBtn.toggleAttribute("disabled", !state.selectedId);
    maskBtn.onclick = () => this.openMaskEditor();
    panel.appendChild(maskBtn);

    const crumb = el("div", "breadcrumb");
    crumb.textContent = this.store
      .activePath()
      .map((id) => id.slice(0, 6))
      .join(" > ");
    panel.appendChild(crumb);
    return panel;
  }

  private renderGallery(): HTMLElement {
    const state = this.store.getState();
    const gallery = el("div", "gallery");
    const selected = state.selectedId && this.store.findNode(state.selectedId);
    if (!selected) {
      gallery.textContent = "create a session to begin";
      return gallery;
    }
    gallery.appendChild(this.thumbnail(selected, true));
    for (const child of selected.children) {
      gallery.appendChild(this.thumbnail(child, false));
    }
    return gallery;
  }

  private thumbnail(node: LineageNode, isSelected: boolean): HTMLElement {
    const card = el("div", isSelected ? "thumb selected" : "thumb");
    const img = document.createElement("img");
    img.src = this.api.imageUrl(node.id);
    img.alt = node.id;
    card.appendChild(img);
    const label = el("div", "thumb-label", node.id.slice(0, 6));
    card.appendChild(label);
    card.onclick = () => this.store.select(node.id);
    return card;
  }

  private renderTree(): HTMLElement {
    const state = this.store.getState();
    const tree = el("div", "tree");
    const rootNode = state.lineage?.root;
    if (!rootNode) return tree;
    const renderNode = (node: LineageNode, depth: number): HTMLElement => {
      const row = el("div", "tree-node");
      row.style.marginLeft = `${depth * 14}px`;
      if (node.children.length) {
        const toggle = el(
          "span",
          "toggle",
          this.collapsed.has(node.id) ? "+" : "-",
        );
        toggle.onclick = (e) => {
          e.stopPropagation();
          if (this.collapsed.has(node.id)) this.collapsed.delete(node.id);
          else this.collapsed.add(node.id);
          this.render();
        };
        row.appendChild(toggle);
      }
      const label = el(
        "span",
        node.id === state.selectedId ? "tree-label selected" : "tree-label",
        `${node.id.slice(0, 6)}${node.beta !== null ? ` b=${node.beta}` : ""}`,
      );
      label.onclick = () => this.store.select(node.id);
      row.appendChild(label);
      const wrap = el("div", "");
      wrap.appendChild(row);
      if (!this.collapsed.has(node.id)) {
        for (const child of node.children) {
          wrap.appendChild(renderNode(child, depth + 1));
        }
      }
      return wrap;
    };
    tree.appendChild(renderNode(rootNode, 0));
    return tree;
  }

  // -- mask editor overlay --

  openMaskEditor(): void {
    const [h, w] = this.imageSize;
    this.maskEditor = new MaskEditor(w, h);
    this.render();
  }

  private renderMaskOverlay(): HTMLElement {
    const editor = this.maskEditor!;
    const overlay = el("div", "mask-overlay");
    const panel = el("div", "mask-panel");

    const canvas = document.createElement("canvas");
    canvas.width = editor.width;
    canvas.height = editor.height;
    canvas.className = "mask-canvas";
    this.maskCanvas = canvas;
    this.drawMask();

    let painting = false;
    const canvasPos = (e: MouseEvent): [number, number] => {
      const rect = canvas.getBoundingClientRect();
      const x = ((e.clientX - rect.left) / rect.width) * editor.width;
      const y = ((e.clientY - rect.top) / rect.height) * editor.height;
      return [Math.floor(x), Math.floor(y)];
    };
    canvas.onmousedown = (e) => {
      const [x, y] = canvasPos(e);
      if (this.brushMode === "brush") {
        painting = true;
        editor.brush(x, y, Math.max(1, editor.width / 16));
      } else {
        this.rectStart = [x, y];
      }
      this.drawMask();
    };
    canvas.onmousemove = (e) => {
      if (painting && this.brushMode === "brush") {
        const [x, y] = canvasPos(e);
        editor.brush(x, y, Math.max(1, editor.width / 16));
        this.drawMask();
      }
    };
    canvas.onmouseup = (e) => {
      painting = false;
      if (this.brushMode === "rect" && this.rectStart) {
        const [x, y] = canvasPos(e);
        editor.rectangle(this.rectStart[0], this.rectStart[1], x, y);
        this.rectStart = null;
        this.drawMask();
      }
    };

    const tools = el("div", "mask-tools");
    const brushBtn = el("button", "", "brush");
    brushBtn.onclick = () => {
      this.brushMode = "brush";
    };
    const rectBtn = el("button", "", "rectangle");
    rectBtn.onclick = () => {
      this.brushMode = "rect";
    };
    const undoBtn = el("button", "", "undo");
    undoBtn.onclick = () => {
      editor.undo();
      this.drawMask();
    };
    const clearBtn = el("button", "", "clear");
    clearBtn.onclick = () => {
      editor.clear();
      this.drawMask();
    };
    const submit = el("button", "submit", "inpaint");
    submit.toggleAttribute("disabled", editor.isEmpty());
    submit.onclick = () => {
      void this.store
        .inpaintSelected({ mask_base64: editor.toPngBase64() })
        .then(() => {
          this.maskEditor = null;
          this.render();
        });
    };
    const cancel = el("button", "", "cancel");
    cancel.onclick = () => {
      this.maskEditor = null;
      this.render();
    };
    tools.append(brushBtn, rectBtn, undoBtn, clearBtn, submit, cancel);
    panel.append(canvas, tools);
    overlay.appendChild(panel);
    return overlay;
  }

  private drawMask(): void {
    const editor = this.maskEditor;
    const canvas = this.maskCanvas;
    if (!editor || !canvas) return;
    const ctx = canvas.getContext("2d")!;
    const image = ctx.createImageData(editor.width, editor.height);
    for (let i = 0; i < editor.pixels.length; i++) {
      const on = editor.pixels[i] === 1;
      image.data[i * 4] = on ? 220 : 30;
      image.data[i * 4 + 1] = 30;
      image.data[i * 4 + 2] = 30;
      image.data[i * 4 + 3] = on ? 200 : 60;
    }
    ctx.putImageData(image, 0, 0);
    const submit = this.root.querySelector(".submit");
    if (submit) submit.toggleAttribute("disabled", editor.isEmpty());
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function labeledSlider(
  label: string,
  value: number,
  min: number,
  max: number,
  step: number,
  onChange: (v: number) => void,
): HTMLElement {
  const wrap = el("label", "control");
  wrap.textContent = `${label}: ${value}`;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  input.value = String(value);
  input.oninput = () => onChange(Number(input.value));
  wrap.appendChild(input);
  return wrap;
}

function labeledNumber(
  label: string,
  value: number,
  onChange: (v: number) => void,
): HTMLElement {
  const wrap = el("label", "control", `${label}: `);
  const input = document.createElement("input");
  input.type = "number";
  input.value = String(value);
  input.onchange = () => onChange(Number(input.value));
  wrap.appendChild(input);
  return wrap;
}
