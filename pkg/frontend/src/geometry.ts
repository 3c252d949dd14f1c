// Planar geometry helpers shared by the renderer and the edit tools.

export type Point = [number, number];

/** Counterclockwise convex hull (monotone chain). */
export function convexHull(points: Point[]): Point[] {
  const pts = [...new Map(points.map((p) => [`${p[0]},${p[1]}`, p])).values()].sort(
    (a, b) => a[0] - b[0] || a[1] - b[1],
  );
  if (pts.length < 3) return pts;
  const cross = (o: Point, a: Point, b: Point) =>
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  const lower: Point[] = [];
  for (const p of pts) {
    while (lower.length >= 2 && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0)
      lower.pop();
    lower.push(p);
  }
  const upper: Point[] = [];
  for (const p of [...pts].reverse()) {
    while (upper.length >= 2 && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0)
      upper.pop();
    upper.push(p);
  }
  return [...lower.slice(0, -1), ...upper.slice(0, -1)];
}

export function polygonArea(poly: Point[]): number {
  let area = 0;
  for (let i = 0; i < poly.length; i++) {
    const [x1, y1] = poly[i];
    const [x2, y2] = poly[(i + 1) % poly.length];
    area += x1 * y2 - x2 * y1;
  }
  return Math.abs(area) / 2;
}

/**
 * Vertices of a bounded 2D polytope {x | Ax <= b}, restricted to the
 * position columns, ordered by angle. Pairwise line intersection is fine at
 * rendering face counts.
 */
export function polygonFromHalfspaces(A: number[][], b: number[]): Point[] {
  const rows: number[][] = [];
  const rhs: number[] = [];
  for (let i = 0; i < A.length; i++) {
    const [ax, ay] = [A[i][0] ?? 0, A[i][1] ?? 0];
    if (ax !== 0 || ay !== 0) {
      rows.push([ax, ay]);
      rhs.push(b[i]);
    }
  }
  const pts: Point[] = [];
  for (let i = 0; i < rows.length; i++) {
    for (let j = i + 1; j < rows.length; j++) {
      const det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
      if (Math.abs(det) < 1e-12) continue;
      const x = (rhs[i] * rows[j][1] - rows[i][1] * rhs[j]) / det;
      const y = (rows[i][0] * rhs[j] - rhs[i] * rows[j][0]) / det;
      if (rows.every((r, k) => r[0] * x + r[1] * y <= rhs[k] + 1e-7)) {
        pts.push([x, y]);
      }
    }
  }
  if (pts.length < 3) return [];
  const cx = pts.reduce((s, p) => s + p[0], 0) / pts.length;
  const cy = pts.reduce((s, p) => s + p[1], 0) / pts.length;
  return pts.sort(
    (a, b2) => Math.atan2(a[1] - cy, a[0] - cx) - Math.atan2(b2[1] - cy, b2[0] - cx),
  );
}

export function pointInPolygon(p: Point, poly: Point[]): boolean {
  let inside = false;
  for (let i = 0, j = poly.length - 1; i < poly.length; j = i++) {
    const [xi, yi] = poly[i];
    const [xj, yj] = poly[j];
    if (yi > p[1] !== yj > p[1] && p[0] < ((xj - xi) * (p[1] - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

export function rectangleVertices(a: Point, b: Point): Point[] {
  const [x0, x1] = [Math.min(a[0], b[0]), Math.max(a[0], b[0])];
  const [y0, y1] = [Math.min(a[1], b[1]), Math.max(a[1], b[1])];
  return [
    [x0, y0],
    [x1, y0],
    [x1, y1],
    [x0, y1],
  ];
}

export function translatePolygon(poly: Point[], dx: number, dy: number): Point[] {
  return poly.map(([x, y]) => [x + dx, y + dy]);
}
