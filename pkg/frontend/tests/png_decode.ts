/**
 * Minimal 8-bit grayscale PNG decoder for tests (filters 0-4), enough to
 * compare pixel values of service-rendered candidate images.
 */

import { inflateSync } from "node:zlib";

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

function readU32(bytes: Uint8Array, offset: number): number {
  return (
    ((bytes[offset] << 24) |
      (bytes[offset + 1] << 16) |
      (bytes[offset + 2] << 8) |
      bytes[offset + 3]) >>>
    0
  );
}

export function decodeGrayPng(png: Uint8Array): GrayImage {
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  let pos = 8; // skip signature
  while (pos < png.length) {
    const length = readU32(png, pos);
    const type = String.fromCharCode(...png.subarray(pos + 4, pos + 8));
    const data = png.subarray(pos + 8, pos + 8 + length);
    if (type === "IHDR") {
      width = readU32(data, 0);
      height = readU32(data, 4);
      if (data[8] !== 8 || data[9] !== 0) {
        throw new Error(`not 8-bit grayscale (depth=${data[8]} color=${data[9]})`);
      }
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + length;
  }
  const compressed = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let off = 0;
  for (const c of idat) {
    compressed.set(c, off);
    off += c.length;
  }
  const raw = inflateSync(compressed);
  const stride = width + 1;
  const pixels = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * stride];
    for (let x = 0; x < width; x++) {
      const value = raw[y * stride + 1 + x];
      const left = x > 0 ? pixels[y * width + x - 1] : 0;
      const up = y > 0 ? pixels[(y - 1) * width + x] : 0;
      const upLeft = x > 0 && y > 0 ? pixels[(y - 1) * width + x - 1] : 0;
      let out: number;
      switch (filter) {
        case 0:
          out = value;
          break;
        case 1:
          out = value + left;
          break;
        case 2:
          out = value + up;
          break;
        case 3:
          out = value + Math.floor((left + up) / 2);
          break;
        case 4: {
          const p = left + up - upLeft;
          const pa = Math.abs(p - left);
          const pb = Math.abs(p - up);
          const pc = Math.abs(p - upLeft);
          const pred = pa <= pb && pa <= pc ? left : pb <= pc ? up : upLeft;
          out = value + pred;
          break;
        }
        default:
          throw new Error(`unsupported filter ${filter}`);
      }
      pixels[y * width + x] = out & 0xff;
    }
  }
  return { width, height, pixels };
}
