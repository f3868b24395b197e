/** Side panel editing the selected object: rotation, scale, color, material, delete. */

import type { ApiClient } from "./api.js";
import type { SceneEntry } from "./types.js";
import { MATERIALS } from "./types.js";
import { formatVec, parseVec } from "./vec.js";

export class ObjectEditor {
  private current: SceneEntry | null = null;

  constructor(
    readonly element: HTMLElement,
    private readonly api: ApiClient,
    private sceneId: string,
    private readonly onEdited: () => void,
  ) {
    this.renderEmpty();
  }

  setSceneId(sceneId: string): void {
    this.sceneId = sceneId;
  }

  show(entry: SceneEntry | null): void {
    this.current = entry;
    if (!entry) {
      this.renderEmpty();
      return;
    }
    this.element.textContent = "";
    const title = document.createElement("h3");
    title.textContent = entry.name;
    this.element.appendChild(title);

    const rotation = parseVec(entry.rotation);
    this.element.appendChild(
      this.numberField("rotation Y (deg)", rotation.y, async (value) => {
        await this.patch({ rotation: formatVec({ ...rotation, y: value }) });
      }),
    );

    const scale = parseVec(entry.scale);
    this.element.appendChild(
      this.numberField("scale (uniform ×)", 1.0, async (factor) => {
        if (factor <= 0) return;
        await this.patch({
          scale: formatVec({ x: scale.x * factor, y: scale.y * factor, z: scale.z * factor }),
        });
      }),
    );

    const colorLabel = document.createElement("label");
    colorLabel.textContent = "color ";
    const color = document.createElement("input");
    color.type = "color";
    color.value = entry.color.toLowerCase();
    color.addEventListener("change", () => void this.patch({ color: color.value.toUpperCase() }));
    colorLabel.appendChild(color);
    this.element.appendChild(colorLabel);

    const materialLabel = document.createElement("label");
    materialLabel.textContent = "material ";
    const material = document.createElement("select");
    for (const name of MATERIALS) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      option.selected = name === entry.material;
      material.appendChild(option);
    }
    material.addEventListener("change", () => void this.patch({ material: material.value }));
    materialLabel.appendChild(material);
    this.element.appendChild(materialLabel);

    const del = document.createElement("button");
    del.className = "danger";
    del.textContent = "Delete object";
    del.addEventListener("click", () => void this.remove());
    this.element.appendChild(del);
  }

  private renderEmpty(): void {
    this.element.textContent = "";
    const hint = document.createElement("p");
    hint.className = "empty-note";
    hint.textContent = "Click an object in the canvas to edit it.";
    this.element.appendChild(hint);
  }

  private numberField(label: string, value: number, commit: (v: number) => Promise<void>): HTMLElement {
    const wrap = document.createElement("label");
    wrap.textContent = `${label} `;
    const input = document.createElement("input");
    input.type = "number";
    input.step = "any";
    input.value = String(value);
    input.addEventListener("change", () => {
      const parsed = Number(input.value);
      if (Number.isFinite(parsed)) void commit(parsed);
    });
    wrap.appendChild(input);
    return wrap;
  }

  private async patch(fields: Record<string, string>): Promise<void> {
    if (!this.current) return;
    try {
      await this.api.patchObject(this.sceneId, this.current.name, fields);
    } finally {
      this.onEdited();
    }
  }

  private async remove(): Promise<void> {
    if (!this.current) return;
    try {
      await this.api.deleteObject(this.sceneId, this.current.name);
    } finally {
      this.current = null;
      this.onEdited();
    }
  }
}
