/** Thin typed client over the service routes; the only way the UI talks to the backend. */

import type { AssetResult, SceneEntry, SessionView } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toError(response: Response): Promise<ApiError> {
  let code = "ERROR";
  let message = response.statusText;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export interface SceneData {
  objects: SceneEntry[];
  revision: number;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await toError(response);
    return response;
  }

  private async postJson(path: string, body: unknown): Promise<any> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return response.json();
  }

  async createScene(): Promise<string> {
    const body = await this.postJson("/scenes", {});
    return body.scene_id;
  }

  async getScene(sceneId: string): Promise<SceneData> {
    const response = await this.request(`/scenes/${sceneId}`);
    const objects = (await response.json()) as SceneEntry[];
    return { objects, revision: Number(response.headers.get("X-Scene-Revision") ?? "0") };
  }

  async instruct(sceneId: string, instruction: string): Promise<string> {
    const body = await this.postJson(`/scenes/${sceneId}/instruct`, { instruction });
    return body.session_id;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    const response = await this.request(`/sessions/${sessionId}`);
    return response.json();
  }

  async applySuggestion(sessionId: string, suggestionId: string): Promise<void> {
    await this.postJson(`/sessions/${sessionId}/suggestions/${suggestionId}/apply`, {});
  }

  async undoSuggestion(sessionId: string, suggestionId: string): Promise<void> {
    await this.postJson(`/sessions/${sessionId}/suggestions/${suggestionId}/undo`, {});
  }

  async regenerateSuggestion(sessionId: string, suggestionId: string): Promise<void> {
    await this.postJson(`/sessions/${sessionId}/suggestions/${suggestionId}/regenerate`, {});
  }

  async patchObject(sceneId: string, name: string, fields: Record<string, string>): Promise<void> {
    await this.request(`/scenes/${sceneId}/objects/${encodeURIComponent(name)}`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(fields),
    });
  }

  async deleteObject(sceneId: string, name: string): Promise<void> {
    await this.request(`/scenes/${sceneId}/objects/${encodeURIComponent(name)}`, {
      method: "DELETE",
    });
  }

  async addObject(sceneId: string, assetId: string, position: string): Promise<string> {
    const body = await this.postJson(`/scenes/${sceneId}/objects`, {
      asset_id: assetId,
      position,
    });
    return body.name;
  }

  async searchAssets(query: string, category?: string): Promise<AssetResult[]> {
    const params = new URLSearchParams({ q: query });
    if (category) params.set("category", category);
    const response = await this.request(`/assets/search?${params}`);
    return (await response.json()).results;
  }
}
