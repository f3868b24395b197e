/** UI state fidelity: a scripted session drives the real wiring (createApp)
 * against a fake server that follows the documented polling contract. The
 * suggestion card's state classes must track the polled server state through
 * processing -> pending -> applied, and Undo must visually revert canvas
 * object positions. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { worldToScreen } from "../src/canvas.js";
import type { AppHandles } from "../src/main.js";
import { createApp } from "../src/main.js";
import { parseVec } from "../src/vec.js";
import { FakeServer, SOFA_APPLIED, SOFA_HOME } from "./fake_server.js";

const SHELL = `
  <span id="status"></span>
  <canvas id="scene-canvas" width="480" height="480"></canvas>
  <div id="object-editor"></div>
  <textarea id="instruction"></textarea>
  <button id="send"></button>
  <div id="suggestions"></div>
  <div id="asset-browser"></div>
`;

async function flush(times = 4): Promise<void> {
  for (let i = 0; i < times; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function card(): HTMLElement {
  return document.querySelector(".suggestion") as HTMLElement;
}

function button(label: string): HTMLButtonElement {
  for (const b of document.querySelectorAll<HTMLButtonElement>(".suggestion button")) {
    if (b.textContent === label) return b;
  }
  throw new Error(`no ${label} button`);
}

function sofaScreenCenter(app: AppHandles): { cx: number; cy: number } {
  const rect = app.canvas.currentLayout().find((r) => r.name === "Sofa")!;
  return { cx: rect.cx, cy: rect.cy };
}

describe("scripted session against the mock server contract", () => {
  let server: FakeServer;
  let app: AppHandles;

  beforeEach(async () => {
    document.body.innerHTML = SHELL;
    server = new FakeServer();
    vi.stubGlobal("fetch", server.fetch);
    app = await createApp(document, new ApiClient("http://fake"));
    await flush();
  });

  afterEach(() => {
    app.poller.stop();
    vi.unstubAllGlobals();
  });

  it("walks processing -> pending -> applied in lockstep with the server, and undo reverts the canvas", async () => {
    (document.getElementById("instruction") as HTMLTextAreaElement).value =
      "make it cozy";
    await app.submitInstruction();
    await flush();

    // first poll saw the suggestion mid-generation
    expect(card().dataset.state).toBe("processing");
    expect(card().classList.contains("state-processing")).toBe(true);

    // processing entries cannot be applied: the click produces no request
    const callsBefore = server.calls.filter((c) => c.includes("/apply")).length;
    button("Apply").click();
    await flush();
    expect(server.calls.filter((c) => c.includes("/apply")).length).toBe(callsBefore);

    // the server finished generating; the next poll shows pending
    app.poller.kick();
    await flush();
    expect(card().dataset.state).toBe("pending");
    expect(card().classList.contains("state-pending")).toBe(true);

    const before = sofaScreenCenter(app);
    const home = worldToScreen(parseVec(SOFA_HOME).x, parseVec(SOFA_HOME).z, 480);
    expect(before).toEqual({ cx: home.u, cy: home.v });

    // apply: the card turns applied and the sofa moves on the canvas
    button("Apply").click();
    await flush();
    expect(server.state).toBe("applied");
    expect(card().dataset.state).toBe("applied");
    expect(card().classList.contains("state-applied")).toBe(true);

    const moved = sofaScreenCenter(app);
    const target = worldToScreen(parseVec(SOFA_APPLIED).x, parseVec(SOFA_APPLIED).z, 480);
    expect(moved).toEqual({ cx: target.u, cy: target.v });
    expect(moved).not.toEqual(before);

    // undo: the card returns to pending and the sofa visually reverts
    button("Undo").click();
    await flush();
    expect(server.state).toBe("pending");
    expect(card().dataset.state).toBe("pending");
    expect(sofaScreenCenter(app)).toEqual(before);
  });

  it("regenerate returns the card to processing with a bumped generation", async () => {
    (document.getElementById("instruction") as HTMLTextAreaElement).value = "again";
    await app.submitInstruction();
    await flush();
    app.poller.kick(); // processing -> pending
    await flush();

    button("Regenerate").click();
    await flush();
    expect(card().dataset.state).toBe("processing");

    app.poller.kick(); // generation finishes again
    await flush();
    expect(card().dataset.state).toBe("pending");
    expect(card().textContent).toContain("generation 2");
  });

  it("a stale apply gets a 409 and the panel re-syncs to the fresh state", async () => {
    (document.getElementById("instruction") as HTMLTextAreaElement).value = "race";
    await app.submitInstruction();
    await flush();
    app.poller.kick();
    await flush();
    expect(card().dataset.state).toBe("pending");

    // another client applies behind our back
    server.handle("http://fake/sessions/s1/suggestions/sug-1/apply", { method: "POST" });
    expect(server.state).toBe("applied");

    button("Apply").click(); // stale: the panel still shows pending
    await flush();
    // the 409 triggered a re-poll; the panel now matches the server
    expect(card().dataset.state).toBe("applied");
  });

  it("canvas rendering is a pure function of the fetched scene", async () => {
    const layoutA = app.canvas.currentLayout();
    await app.refreshScene();
    expect(app.canvas.currentLayout()).toEqual(layoutA);
  });
});
