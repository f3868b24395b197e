/** Bootstraps the single-page client against the service it is served from. */

import { ApiClient } from "./api.js";
import { AssetBrowser } from "./assets.js";
import { SceneCanvas } from "./canvas.js";
import { ObjectEditor } from "./editor.js";
import { SuggestionPanel } from "./panel.js";
import { SessionPoller } from "./poller.js";

export interface AppHandles {
  api: ApiClient;
  canvas: SceneCanvas;
  panel: SuggestionPanel;
  poller: SessionPoller;
  editor: ObjectEditor;
  refreshScene: () => Promise<void>;
  submitInstruction: () => Promise<void>;
  sceneId: () => string;
}

/** Wire the app into an existing DOM; exported so tests can drive the real wiring. */
export async function createApp(root: Document, api: ApiClient): Promise<AppHandles> {
  const canvasEl = root.getElementById("scene-canvas") as HTMLCanvasElement;
  const panelEl = root.getElementById("suggestions")!;
  const editorEl = root.getElementById("object-editor")!;
  const assetsEl = root.getElementById("asset-browser")!;
  const instructionEl = root.getElementById("instruction") as HTMLTextAreaElement;
  const sendEl = root.getElementById("send") as HTMLButtonElement;
  const statusEl = root.getElementById("status")!;

  let sceneId = await api.createScene();

  const refreshScene = async () => {
    const data = await api.getScene(sceneId);
    canvas.setScene(data.objects);
    statusEl.textContent = `scene ${sceneId} · revision ${data.revision}`;
  };

  const poller = new SessionPoller(api, (view) => {
    panel.render(view);
  });

  const panel = new SuggestionPanel(panelEl, api, {
    onMutated: () => {
      void refreshScene();
      poller.kick();
    },
    onResync: () => poller.kick(),
  });

  const editor = new ObjectEditor(editorEl, api, sceneId, () => void refreshScene());

  const canvas = new SceneCanvas(canvasEl, api, sceneId, {
    onSelect: (name) => editor.show(name ? (canvas.objectByName(name) ?? null) : null),
    onMoved: () => void refreshScene(),
  });

  new AssetBrowser(assetsEl, api, sceneId, () => void refreshScene(), [
    "Bed", "Chair", "Decoration", "Lamp", "Plant", "Rug", "Shelf", "Sofa", "TV", "Table",
  ]);

  const submitInstruction = async () => {
    const instruction = instructionEl.value.trim();
    if (!instruction) return;
    sendEl.disabled = true;
    try {
      const sessionId = await api.instruct(sceneId, instruction);
      panel.setSession(sessionId);
      poller.watch(sessionId);
    } finally {
      sendEl.disabled = false;
    }
  };
  sendEl.addEventListener("click", () => void submitInstruction());

  await refreshScene();
  return {
    api,
    canvas,
    panel,
    poller,
    editor,
    refreshScene,
    submitInstruction,
    sceneId: () => sceneId,
  };
}

// browser entry point; tests import createApp directly instead
if (typeof window !== "undefined" && document.getElementById("scene-canvas")) {
  void createApp(document, new ApiClient(""));
}
