/**
 * Studio state store.
 *
 * The server is the source of truth: every action maps to exactly one
 * service call, and the lineage view is rebuilt from GET lineage after
 * each mutation, so a browser refresh loses nothing. At most one branch
 * request may be in flight per parent; control values are clamped to the
 * ranges the service accepts.
 */

import { ApiClient, CandidateInfo, Lineage, LineageNode } from "./api.js";

export interface Controls {
  beta: number;
  steps: number;
  n: number;
}

export const CONTROL_LIMITS = {
  beta: { min: 0.01, max: 0.5 },
  steps: { min: 1, max: 1000 },
  n: { min: 1, max: 16 },
};

export const DEFAULT_CONTROLS: Controls = { beta: 0.2, steps: 100, n: 8 };

export function clampControls(raw: Controls): Controls {
  const clamp = (v: number, lo: number, hi: number) =>
    Math.min(hi, Math.max(lo, v));
  return {
    beta: clamp(raw.beta, CONTROL_LIMITS.beta.min, CONTROL_LIMITS.beta.max),
    steps: Math.round(
      clamp(raw.steps, CONTROL_LIMITS.steps.min, CONTROL_LIMITS.steps.max),
    ),
    n: Math.round(clamp(raw.n, CONTROL_LIMITS.n.min, CONTROL_LIMITS.n.max)),
  };
}

export interface StudioState {
  sessionId: string | null;
  selectedId: string | null;
  controls: Controls;
  lineage: Lineage | null;
  pendingParents: Set<string>;
  error: string | null;
}

type Listener = (state: StudioState) => void;

export class StudioStore {
  private state: StudioState = {
    sessionId: null,
    selectedId: null,
    controls: { ...DEFAULT_CONTROLS },
    lineage: null,
    pendingParents: new Set(),
    error: null,
  };
  private listeners: Listener[] = [];

  constructor(private api: ApiClient) {}

  getState(): StudioState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(patch: Partial<StudioState>): void {
    this.state = { ...this.state, ...patch };
    for (const l of this.listeners) l(this.state);
  }

  setControls(raw: Controls): void {
    this.emit({ controls: clampControls(raw) });
  }

  dismissError(): void {
    this.emit({ error: null });
  }

  /** Find a node in the current lineage by candidate id. */
  findNode(candidateId: string): LineageNode | null {
    const root = this.state.lineage?.root;
    if (!root) return null;
    const stack: LineageNode[] = [root];
    while (stack.length) {
      const node = stack.pop()!;
      if (node.id === candidateId) return node;
      stack.push(...node.children);
    }
    return null;
  }

  async refreshLineage(): Promise<void> {
    if (!this.state.sessionId) return;
    const lineage = await this.api.lineage(this.state.sessionId);
    let selected = this.state.selectedId;
    if (!selected || !this.nodeExists(lineage.root, selected)) {
      selected = lineage.root?.id ?? null;
    }
    this.emit({ lineage, selectedId: selected });
  }

  private nodeExists(root: LineageNode | null, id: string): boolean {
    if (!root) return false;
    const stack = [root];
    while (stack.length) {
      const node = stack.pop()!;
      if (node.id === id) return true;
      stack.push(...node.children);
    }
    return false;
  }

  /** Restore state for an existing session (e.g. after browser refresh). */
  async attachSession(sessionId: string): Promise<void> {
    this.emit({ sessionId });
    await this.refreshLineage();
  }

  async createSession(source: {
    source: "upload" | "dataset-index" | "synthesize";
    image_base64?: string;
    index?: number;
    seed?: number;
  }): Promise<void> {
    try {
      const res = await this.api.createSession(source);
      this.emit({ sessionId: res.session_id, selectedId: res.root_candidate.id });
      await this.refreshLineage();
    } catch (err) {
      this.emit({ error: String(err) });
      throw err;
    }
  }

  select(candidateId: string): void {
    if (this.findNode(candidateId)) {
      this.emit({ selectedId: candidateId });
    }
  }

  /** Branch the selected candidate into a new gallery of children. */
  async branchSelected(): Promise<CandidateInfo[]> {
    const { sessionId, selectedId, controls, pendingParents } = this.state;
    if (!sessionId || !selectedId) throw new Error("no candidate selected");
    if (pendingParents.has(selectedId)) {
      throw new Error("a branch request for this candidate is already running");
    }
    this.emit({ pendingParents: new Set([...pendingParents, selectedId]) });
    try {
      const kids = await this.api.branch(sessionId, selectedId, controls);
      await this.refreshLineage();
      return kids;
    } catch (err) {
      this.emit({ error: String(err) });
      throw err;
    } finally {
      const pending = new Set(this.state.pendingParents);
      pending.delete(selectedId);
      this.emit({ pendingParents: pending });
    }
  }

  /** Inpaint the selected candidate with a painted mask. */
  async inpaintSelected(mask: {
    mask_base64?: string;
    mask?: number[];
  }): Promise<CandidateInfo> {
    const { sessionId, selectedId } = this.state;
    if (!sessionId || !selectedId) throw new Error("no candidate selected");
    try {
      const child = await this.api.inpaint(sessionId, selectedId, mask);
      await this.refreshLineage();
      return child;
    } catch (err) {
      this.emit({ error: String(err) });
      throw err;
    }
  }

  /** Breadcrumb: path of ids from the root to the selected candidate. */
  activePath(): string[] {
    const target = this.state.selectedId;
    const root = this.state.lineage?.root;
    if (!root || !target) return [];
    const path: string[] = [];
    const walk = (node: LineageNode, trail: string[]): boolean => {
      const next = [...trail, node.id];
      if (node.id === target) {
        path.push(...next);
        return true;
      }
      return node.children.some((c) => walk(c, next));
    };
    walk(root, []);
    return path;
  }
}
