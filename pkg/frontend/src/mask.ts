/**
 * Mask editor model: a binary grid painted with brush strokes and
 * rectangles, with an undo stack. Pixels set to 1 mark regions the
 * model should regenerate; 0 pixels stay untouched. Pure logic — the
 * canvas layer renders it, tests drive it directly.
 */

import { bytesToBase64, encodeGrayPng } from "./png.js";

export class MaskEditor {
  private grid: Uint8Array;
  private undoStack: Uint8Array[] = [];

  constructor(
    public readonly width: number,
    public readonly height: number,
  ) {
    this.grid = new Uint8Array(width * height);
  }

  get pixels(): Uint8Array {
    return this.grid;
  }

  setPixelCount(): number {
    let count = 0;
    for (const v of this.grid) count += v;
    return count;
  }

  isEmpty(): boolean {
    return this.setPixelCount() === 0;
  }

  private snapshot(): void {
    this.undoStack.push(this.grid.slice());
    if (this.undoStack.length > 64) this.undoStack.shift();
  }

  /** Paint a filled circle of the given radius around (x, y). */
  brush(x: number, y: number, radius: number): void {
    this.snapshot();
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(x - radius));
    const x1 = Math.min(this.width - 1, Math.ceil(x + radius));
    const y0 = Math.max(0, Math.floor(y - radius));
    const y1 = Math.min(this.height - 1, Math.ceil(y + radius));
    for (let py = y0; py <= y1; py++) {
      for (let px = x0; px <= x1; px++) {
        const dx = px - x;
        const dy = py - y;
        if (dx * dx + dy * dy <= r2) this.grid[py * this.width + px] = 1;
      }
    }
  }

  /** Paint an axis-aligned rectangle, inclusive of both corners. */
  rectangle(x0: number, y0: number, x1: number, y1: number): void {
    this.snapshot();
    const [xa, xb] = x0 <= x1 ? [x0, x1] : [x1, x0];
    const [ya, yb] = y0 <= y1 ? [y0, y1] : [y1, y0];
    for (let y = Math.max(0, ya); y <= Math.min(this.height - 1, yb); y++) {
      for (let x = Math.max(0, xa); x <= Math.min(this.width - 1, xb); x++) {
        this.grid[y * this.width + x] = 1;
      }
    }
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.grid = prev;
    return true;
  }

  clear(): void {
    this.snapshot();
    this.grid.fill(0);
  }

  /** Flat 0/1 list in row-major order (JSON transport). */
  toArray(): number[] {
    return Array.from(this.grid);
  }

  /** PNG with painted pixels at 255, deterministic bytes. */
  toPngBytes(): Uint8Array {
    const pixels = new Uint8Array(this.grid.length);
    for (let i = 0; i < this.grid.length; i++) {
      pixels[i] = this.grid[i] ? 255 : 0;
    }
    return encodeGrayPng(pixels, this.width, this.height);
  }

  toPngBase64(): string {
    return bytesToBase64(this.toPngBytes());
  }
}
