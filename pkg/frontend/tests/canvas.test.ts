import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  ROOM_SIZE,
  SceneCanvas,
  computeLayout,
  hitTest,
  screenToWorld,
  worldToScreen,
} from "../src/canvas.js";
import type { SceneEntry } from "../src/types.js";
import { FakeServer } from "./fake_server.js";

const SIZE = 480;

function entry(name: string, position: string, scale = "(1.00, 1.00, 1.00)", rotation = "(0.00, 0.00, 0.00)"): SceneEntry {
  return { name, position, rotation, scale, color: "#FF0000", material: "Unset" };
}

describe("projection", () => {
  it("maps the origin to the canvas center", () => {
    expect(worldToScreen(0, 0, SIZE)).toEqual({ u: SIZE / 2, v: SIZE / 2 });
  });

  it("maps +z to the top of the canvas", () => {
    const { v } = worldToScreen(0, ROOM_SIZE / 2, SIZE);
    expect(v).toBe(0);
  });

  it("round-trips screen and world coordinates", () => {
    const { u, v } = worldToScreen(1.25, -2.5, SIZE);
    const { x, z } = screenToWorld(u, v, SIZE);
    expect(x).toBeCloseTo(1.25, 10);
    expect(z).toBeCloseTo(-2.5, 10);
  });
});

describe("computeLayout", () => {
  it("is a pure function of the scene JSON", () => {
    const objects = [entry("A", "(0.00, 0.00, 0.00)", "(2.00, 1.00, 1.00)")];
    const first = computeLayout(objects, SIZE);
    const second = computeLayout(objects, SIZE);
    expect(first).toEqual(second);
    expect(first[0]).toMatchObject({
      name: "A",
      cx: SIZE / 2,
      cy: SIZE / 2,
      w: (2 / ROOM_SIZE) * SIZE,
      h: (1 / ROOM_SIZE) * SIZE,
      color: "#FF0000",
    });
  });

  it("positions an off-center object correctly", () => {
    const [rect] = computeLayout([entry("B", "(2.00, 0.50, -2.00)")], SIZE);
    expect(rect.cx).toBe(worldToScreen(2, -2, SIZE).u);
    expect(rect.cy).toBe(worldToScreen(2, -2, SIZE).v);
  });
});

describe("hitTest", () => {
  it("finds the topmost object under the cursor", () => {
    const layout = computeLayout(
      [entry("under", "(0.00, 0.00, 0.00)", "(2.00, 1.00, 2.00)"), entry("over", "(0.00, 0.00, 0.00)")],
      SIZE,
    );
    expect(hitTest(layout, SIZE / 2, SIZE / 2)).toBe("over");
    expect(hitTest(layout, 10, 10)).toBeNull();
  });

  it("respects rotation", () => {
    // a long thin plank rotated 90 degrees: its long side now runs vertically
    const layout = computeLayout(
      [entry("plank", "(0.00, 0.00, 0.00)", "(3.00, 1.00, 0.20)", "(0.00, 90.00, 0.00)")],
      SIZE,
    );
    const px = (meters: number) => (meters / ROOM_SIZE) * SIZE;
    expect(hitTest(layout, SIZE / 2, SIZE / 2 - px(1.2))).toBe("plank");
    expect(hitTest(layout, SIZE / 2 - px(1.2), SIZE / 2)).toBeNull();
  });
});

describe("SceneCanvas interactions", () => {
  function setup() {
    const server = new FakeServer();
    vi.stubGlobal("fetch", server.fetch);
    const element = document.createElement("canvas");
    element.width = SIZE;
    element.height = SIZE;
    document.body.appendChild(element);
    const selected: Array<string | null> = [];
    let moved = 0;
    const canvas = new SceneCanvas(element, new ApiClient("http://fake"), "scene-1", {
      onSelect: (name) => selected.push(name),
      onMoved: () => {
        moved += 1;
      },
    });
    canvas.setScene(server.objects);
    return { server, element, canvas, selected, movedCount: () => moved };
  }

  function mouse(element: HTMLElement, type: string, x: number, y: number) {
    element.dispatchEvent(new MouseEvent(type, { clientX: x, clientY: y, bubbles: true }));
  }

  it("click selects the object under the cursor", () => {
    const { element, canvas, selected } = setup();
    const sofa = worldToScreen(0, 2, SIZE);
    mouse(element, "mousedown", sofa.u, sofa.v);
    mouse(element, "mouseup", sofa.u, sofa.v);
    expect(canvas.selected).toBe("Sofa");
    expect(selected).toContain("Sofa");
  });

  it("clicking empty space clears the selection", () => {
    const { element, canvas } = setup();
    mouse(element, "mousedown", 5, 5);
    mouse(element, "mouseup", 5, 5);
    expect(canvas.selected).toBeNull();
  });

  it("drag issues a PATCH with the new position and keeps the height", async () => {
    const { server, element, movedCount } = setup();
    const from = worldToScreen(0, 2, SIZE);
    const to = worldToScreen(2, -1, SIZE);
    mouse(element, "mousedown", from.u, from.v);
    mouse(element, "mousemove", to.u, to.v);
    mouse(element, "mouseup", to.u, to.v);
    await new Promise((r) => setTimeout(r, 0));
    expect(server.calls).toContain("PATCH /scenes/scene-1/objects/Sofa");
    expect(server.objects[0].position).toBe("(2.00, 0.00, -1.00)");
    expect(movedCount()).toBe(1);
  });
});
