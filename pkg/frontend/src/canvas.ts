/** Top-down scene canvas: rotated footprint rectangles, click-select, drag-move.
 *
 * Rendering is a pure function of the last-fetched scene JSON: computeLayout
 * turns entries into screen-space rectangles, and paint() just draws them.
 * The room is the backend's default 8 m x 8 m square centered on the origin;
 * world +z points to the top of the canvas.
 */

import type { ApiClient } from "./api.js";
import type { SceneEntry } from "./types.js";
import { formatVec, parseVec } from "./vec.js";

export const ROOM_SIZE = 8.0;

export interface LayoutRect {
  name: string;
  cx: number; // screen px
  cy: number;
  w: number;
  h: number;
  angleRad: number; // screen-space rotation
  color: string;
}

export function worldToScreen(x: number, z: number, size: number): { u: number; v: number } {
  return {
    u: ((x + ROOM_SIZE / 2) / ROOM_SIZE) * size,
    v: ((ROOM_SIZE / 2 - z) / ROOM_SIZE) * size,
  };
}

export function screenToWorld(u: number, v: number, size: number): { x: number; z: number } {
  return {
    x: (u / size) * ROOM_SIZE - ROOM_SIZE / 2,
    z: ROOM_SIZE / 2 - (v / size) * ROOM_SIZE,
  };
}

export function computeLayout(objects: SceneEntry[], size: number): LayoutRect[] {
  return objects.map((entry) => {
    const p = parseVec(entry.position);
    const s = parseVec(entry.scale);
    const yawDeg = parseVec(entry.rotation).y;
    const { u, v } = worldToScreen(p.x, p.z, size);
    return {
      name: entry.name,
      cx: u,
      cy: v,
      w: (s.x / ROOM_SIZE) * size,
      h: (s.z / ROOM_SIZE) * size,
      // +yaw is counterclockwise seen from above; screen y grows downward
      angleRad: (-yawDeg * Math.PI) / 180,
      color: entry.color,
    };
  });
}

export function hitTest(layout: LayoutRect[], u: number, v: number): string | null {
  // later objects draw on top, so scan back to front
  for (let i = layout.length - 1; i >= 0; i--) {
    const r = layout[i];
    const du = u - r.cx;
    const dv = v - r.cy;
    const cos = Math.cos(-r.angleRad);
    const sin = Math.sin(-r.angleRad);
    const lx = cos * du - sin * dv;
    const ly = sin * du + cos * dv;
    if (Math.abs(lx) <= r.w / 2 && Math.abs(ly) <= r.h / 2) return r.name;
  }
  return null;
}

export interface CanvasCallbacks {
  onSelect(name: string | null): void;
  onMoved(): void; // fires after a drag's PATCH lands
}

export class SceneCanvas {
  private objects: SceneEntry[] = [];
  private layout: LayoutRect[] = [];
  selected: string | null = null;
  private dragging: { name: string; y: number } | null = null;
  private dragGhost: { u: number; v: number } | null = null;

  constructor(
    readonly element: HTMLCanvasElement,
    private readonly api: ApiClient,
    private sceneId: string,
    private readonly callbacks: CanvasCallbacks,
  ) {
    element.addEventListener("mousedown", (e) => this.onDown(e));
    element.addEventListener("mousemove", (e) => this.onMove(e));
    element.addEventListener("mouseup", (e) => void this.onUp(e));
  }

  setSceneId(sceneId: string): void {
    this.sceneId = sceneId;
  }

  setScene(objects: SceneEntry[]): void {
    this.objects = objects;
    this.layout = computeLayout(objects, this.size);
    if (this.selected && !objects.some((o) => o.name === this.selected)) {
      this.selected = null;
      this.callbacks.onSelect(null);
    }
    this.paint();
  }

  get size(): number {
    return this.element.width;
  }

  currentLayout(): LayoutRect[] {
    return this.layout;
  }

  objectByName(name: string): SceneEntry | undefined {
    return this.objects.find((o) => o.name === name);
  }

  private eventPoint(e: MouseEvent): { u: number; v: number } {
    const rect = this.element.getBoundingClientRect();
    return { u: e.clientX - rect.left, v: e.clientY - rect.top };
  }

  private onDown(e: MouseEvent): void {
    const { u, v } = this.eventPoint(e);
    const hit = hitTest(this.layout, u, v);
    this.selected = hit;
    this.callbacks.onSelect(hit);
    if (hit) {
      const entry = this.objectByName(hit)!;
      this.dragging = { name: hit, y: parseVec(entry.position).y };
      this.dragGhost = { u, v };
    }
    this.paint();
  }

  private onMove(e: MouseEvent): void {
    if (!this.dragging) return;
    this.dragGhost = this.eventPoint(e);
    this.paint();
  }

  private async onUp(e: MouseEvent): Promise<void> {
    if (!this.dragging) return;
    const drag = this.dragging;
    this.dragging = null;
    this.dragGhost = null;
    const { u, v } = this.eventPoint(e);
    const { x, z } = screenToWorld(u, v, this.size);
    try {
      await this.api.patchObject(this.sceneId, drag.name, {
        position: formatVec({ x, y: drag.y, z }),
      });
    } catch {
      // a rejected move just re-syncs; nothing to roll back locally
    }
    this.callbacks.onMoved();
  }

  paint(): void {
    const ctx = this.element.getContext("2d");
    if (!ctx) return; // headless test environments have no 2D context
    const size = this.size;
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, size, size);
    ctx.strokeStyle = "#cccccc";
    ctx.strokeRect(0, 0, size, size);
    for (const r of this.layout) {
      ctx.save();
      const ghost = this.dragging?.name === r.name ? this.dragGhost : null;
      ctx.translate(ghost ? ghost.u : r.cx, ghost ? ghost.v : r.cy);
      ctx.rotate(r.angleRad);
      ctx.fillStyle = r.color;
      ctx.fillRect(-r.w / 2, -r.h / 2, r.w, r.h);
      if (r.name === this.selected) {
        ctx.lineWidth = 2;
        ctx.strokeStyle = "#ff8800";
        ctx.strokeRect(-r.w / 2, -r.h / 2, r.w, r.h);
      }
      ctx.restore();
    }
  }
}
