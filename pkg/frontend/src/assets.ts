/** Asset browser: search box + results; clicking a result adds it at the room center. */

import type { ApiClient } from "./api.js";

export class AssetBrowser {
  private readonly input: HTMLInputElement;
  private readonly categorySelect: HTMLSelectElement;
  private readonly results: HTMLElement;

  constructor(
    readonly element: HTMLElement,
    private readonly api: ApiClient,
    private sceneId: string,
    private readonly onAdded: () => void,
    categories: string[] = [],
  ) {
    this.input = document.createElement("input");
    this.input.placeholder = "search assets…";
    this.categorySelect = document.createElement("select");
    const any = document.createElement("option");
    any.value = "";
    any.textContent = "any category";
    this.categorySelect.appendChild(any);
    for (const category of categories) {
      const option = document.createElement("option");
      option.value = category;
      option.textContent = category;
      this.categorySelect.appendChild(option);
    }
    const go = document.createElement("button");
    go.textContent = "Search";
    go.addEventListener("click", () => void this.search());
    this.input.addEventListener("keydown", (e) => {
      if (e.key === "Enter") void this.search();
    });
    this.results = document.createElement("div");
    this.results.className = "asset-results";
    element.append(this.input, this.categorySelect, go, this.results);
  }

  setSceneId(sceneId: string): void {
    this.sceneId = sceneId;
  }

  private async search(): Promise<void> {
    const query = this.input.value.trim();
    if (!query) return;
    this.results.textContent = "searching…";
    try {
      const found = await this.api.searchAssets(query, this.categorySelect.value || undefined);
      this.results.textContent = "";
      for (const asset of found) {
        const row = document.createElement("button");
        row.className = "asset-row";
        row.textContent = `${asset.asset_id} (${asset.category}, ${asset.score.toFixed(3)})`;
        row.title = asset.description;
        row.addEventListener("click", () => void this.add(asset.asset_id));
        this.results.appendChild(row);
      }
      if (!found.length) this.results.textContent = "no matches";
    } catch (error) {
      this.results.textContent = `search failed: ${String(error)}`;
    }
  }

  private async add(assetId: string): Promise<void> {
    await this.api.addObject(this.sceneId, assetId, "(0.00, 0.00, 0.00)");
    this.onAdded();
  }
}
