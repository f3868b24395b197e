/** Helpers for the service's "(x, y, z)" vector strings. */

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

const VECTOR_RE = /^\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\)$/;

export function parseVec(text: string): Vec3 {
  const m = VECTOR_RE.exec(text.trim());
  if (!m) throw new Error(`not a vector: ${text}`);
  return { x: Number(m[1]), y: Number(m[2]), z: Number(m[3]) };
}

export function formatVec(v: Vec3): string {
  const f = (n: number) => n.toFixed(2);
  return `(${f(v.x)}, ${f(v.y)}, ${f(v.z)})`;
}
