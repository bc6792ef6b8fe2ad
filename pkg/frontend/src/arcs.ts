/** Dependency-arc geometry for the flagged token's local neighborhood.
 * Long learner sentences stay readable by showing only the focus token, its
 * head, and its dependents; a full-tree variant backs the toggle. */

import type { TokenRow } from './types.js';

export interface ArcEdge {
  from: number; // dependent token id
  to: number; // head token id (0 = root)
  label: string;
  focus: boolean;
}

export interface ArcView {
  tokenIds: number[]; // tokens to draw, in sentence order
  edges: ArcEdge[];
}

export function localArcView(tokens: TokenRow[], focusId: number): ArcView {
  const focus = tokens.find((t) => t.id === focusId);
  if (!focus) {
    return { tokenIds: [], edges: [] };
  }
  const shown = new Set<number>([focusId]);
  if (focus.head !== 0) shown.add(focus.head);
  const edges: ArcEdge[] = [{ from: focus.id, to: focus.head, label: focus.deprel, focus: true }];
  for (const token of tokens) {
    if (token.head === focusId) {
      shown.add(token.id);
      edges.push({ from: token.id, to: token.head, label: token.deprel, focus: false });
    }
  }
  return {
    tokenIds: tokens.map((t) => t.id).filter((id) => shown.has(id)),
    edges,
  };
}

export function fullArcView(tokens: TokenRow[], focusId: number): ArcView {
  return {
    tokenIds: tokens.map((t) => t.id),
    edges: tokens.map((t) => ({
      from: t.id,
      to: t.head,
      label: t.deprel,
      focus: t.id === focusId,
    })),
  };
}

export interface ArcGeometry {
  x1: number;
  x2: number;
  height: number;
  label: string;
  focus: boolean;
  toRoot: boolean;
}

const SLOT_WIDTH = 72;

/** Map an ArcView onto x-coordinates; arc height grows with token distance. */
export function layoutArcs(view: ArcView): { width: number; arcs: ArcGeometry[] } {
  const position = new Map<number, number>();
  view.tokenIds.forEach((id, index) => position.set(id, index * SLOT_WIDTH + SLOT_WIDTH / 2));
  const arcs: ArcGeometry[] = [];
  for (const edge of view.edges) {
    const x1 = position.get(edge.from);
    if (x1 === undefined) continue;
    if (edge.to === 0) {
      arcs.push({ x1, x2: x1, height: 48, label: edge.label, focus: edge.focus, toRoot: true });
      continue;
    }
    const x2 = position.get(edge.to);
    if (x2 === undefined) continue;
    const span = Math.abs(
      view.tokenIds.indexOf(edge.from) - view.tokenIds.indexOf(edge.to),
    );
    arcs.push({
      x1,
      x2,
      height: 18 + span * 14,
      label: edge.label,
      focus: edge.focus,
      toRoot: false,
    });
  }
  return { width: view.tokenIds.length * SLOT_WIDTH, arcs };
}
