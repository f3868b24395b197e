/** Wire types of the scene service API (see docs/api.md in the backend repo). */

export interface SceneEntry {
  name: string;
  position: string; // "(x, y, z)", meters
  rotation: string; // "(x, y, z)", degrees
  scale: string; // "(x, y, z)", extents in meters
  color: string; // "#RRGGBB"
  material: string;
}

export type SuggestionState = "processing" | "pending" | "applied" | "failed";

export interface SuggestionView {
  suggestion_id: string;
  text: string;
  state: SuggestionState;
  generation: number;
  diagnostics: string[];
}

export interface SessionView {
  session_id: string;
  scene_id: string;
  instruction: string;
  entries: SuggestionView[];
  diagnostics: string[];
}

export interface AssetResult {
  asset_id: string;
  score: number;
  name: string;
  category: string;
  description: string;
}

export const MATERIALS = [
  "Unset",
  "Basket",
  "Black_Plastic",
  "Brick",
  "Bronze_Metal",
  "Copper_metal",
  "Dark_Oak",
  "Flow_Water",
  "Flower_Pattern",
  "Glass",
  "Glass_Dark",
  "Golden_metal_material",
  "Grass",
  "Leaf_Pattern",
  "Leather",
  "Marble",
  "Rustic_Wood",
  "Shiny_Metal",
] as const;
