import init, { Demo } from "./pkg/artic_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("view");
const ctx = canvas.getContext("2d");
const out = $("out");

let demo = null;
let yaw = 0.6;
let pitch = 0.35;
let view = { rest: null, labels: null, frame: null, truth: null, estimate: null };

function num(id) {
  return Number($(id).value);
}

function report(fn) {
  try {
    fn();
  } catch (e) {
    out.textContent = "error: " + (e.message || e);
  }
}

function refresh() {
  view.rest = demo.restPoints();
  view.labels = demo.restLabels();
  view.truth = demo.truthSegment();
  view.estimate = demo.estimateSegment();
  const slider = $("frame");
  slider.max = demo.frameCount() - 1;
  slider.value = Math.min(slider.value, slider.max);
  view.frame = demo.framePoints(Number(slider.value));
  draw();
}

function bounds(points) {
  let lo = [Infinity, Infinity, Infinity];
  let hi = [-Infinity, -Infinity, -Infinity];
  for (let i = 0; i < points.length; i += 3) {
    for (let k = 0; k < 3; k++) {
      lo[k] = Math.min(lo[k], points[i + k]);
      hi[k] = Math.max(hi[k], points[i + k]);
    }
  }
  const center = lo.map((v, k) => (v + hi[k]) / 2);
  const size = Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) || 1;
  return { center, size };
}

function projector() {
  const { center, size } = bounds(view.rest);
  const scale = (0.75 * Math.min(canvas.width, canvas.height)) / size;
  const [cy, sy, cp, sp] = [Math.cos(yaw), Math.sin(yaw), Math.cos(pitch), Math.sin(pitch)];
  return (x, y, z) => {
    x -= center[0];
    y -= center[1];
    z -= center[2];
    const x1 = cy * x + sy * y;
    const y1 = -sy * x + cy * y;
    const z1 = cp * z - sp * y1;
    return [canvas.width / 2 + scale * x1, canvas.height / 2 - scale * z1];
  };
}

function dots(points, color, filter) {
  const project = projector();
  ctx.fillStyle = color;
  for (let i = 0, n = 0; i < points.length; i += 3, n++) {
    if (filter && !filter(n)) continue;
    const [u, v] = project(points[i], points[i + 1], points[i + 2]);
    ctx.fillRect(u - 1, v - 1, 2, 2);
  }
}

function segment(s, color) {
  if (!s || s.length < 6) return;
  const project = projector();
  const [a, b] = [project(s[0], s[1], s[2]), project(s[3], s[4], s[5])];
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(a[0], a[1]);
  ctx.lineTo(b[0], b[1]);
  ctx.stroke();
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!view.rest) return;
  dots(view.rest, "#888", (n) => view.labels[n] === 0);
  dots(view.rest, "#3a6fd8", (n) => view.labels[n] === 1);
  dots(view.frame, "#d88a3a");
  segment(view.truth, "#1a9a3a");
  segment(view.estimate, "#d21");
}

function generate() {
  report(() => {
    if (demo) demo.free();
    demo = new Demo($("template").value, num("seed"), num("points"), num("frames"));
    out.textContent = "generated; run the search to estimate the axis";
    refresh();
  });
}

function degrade() {
  report(() => {
    demo.degrade(num("jitter"), num("dropout"), num("outliers"), num("seed"));
    out.textContent = "frames degraded";
    refresh();
  });
}

function estimate() {
  out.textContent = "searching…";
  // Yield so the status text paints before the blocking search.
  setTimeout(() => report(() => {
    const started = performance.now();
    const r = JSON.parse(demo.estimate($("kind").value));
    const ms = performance.now() - started;
    out.textContent =
      `kind ${r.kind}\n` +
      `direction [${r.direction.map((v) => v.toFixed(4)).join(", ")}]\n` +
      `origin [${r.origin.map((v) => v.toFixed(4)).join(", ")}]\n` +
      `angle error ${r.angle_error_deg.toFixed(3)}°, position error ${r.position_error.toFixed(4)} ` +
      `(diagonal ${r.diagonal.toFixed(3)})\n` +
      `residual ${r.residual.toExponential(3)}, ${ms.toFixed(0)} ms`;
    refresh();
  }), 10);
}

let dragging = null;
canvas.addEventListener("pointerdown", (e) => (dragging = [e.clientX, e.clientY]));
window.addEventListener("pointerup", () => (dragging = null));
window.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  yaw += (e.clientX - dragging[0]) * 0.01;
  pitch = Math.max(-1.5, Math.min(1.5, pitch + (e.clientY - dragging[1]) * 0.01));
  dragging = [e.clientX, e.clientY];
  draw();
});

$("generate").onclick = generate;
$("degrade").onclick = degrade;
$("estimate").onclick = estimate;
$("frame").oninput = () => {
  view.frame = demo.framePoints(num("frame"));
  draw();
};

await init();
generate();
