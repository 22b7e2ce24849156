/**
 * Lineage view helpers: flatten the server's tree for rendering and
 * compute per-node depth/counts for the collapsible view.
 */

import { Lineage, LineageNode } from "./api.js";

export interface FlatNode {
  id: string;
  parentId: string | null;
  depth: number;
  childCount: number;
  beta: number | null;
  steps: number | null;
  subSeed: number;
}

export function flattenLineage(lineage: Lineage): FlatNode[] {
  const out: FlatNode[] = [];
  const walk = (node: LineageNode, depth: number) => {
    out.push({
      id: node.id,
      parentId: node.parent_id,
      depth,
      childCount: node.children.length,
      beta: node.beta,
      steps: node.steps,
      subSeed: node.sub_seed,
    });
    for (const child of node.children) walk(child, depth + 1);
  };
  if (lineage.root) walk(lineage.root, 0);
  return out;
}

export function countNodes(lineage: Lineage): number {
  return flattenLineage(lineage).length;
}

export function maxDepth(lineage: Lineage): number {
  return flattenLineage(lineage).reduce((d, n) => Math.max(d, n.depth), 0);
}

export function childrenOf(lineage: Lineage, id: string): FlatNode[] {
  return flattenLineage(lineage).filter((n) => n.parentId === id);
}
