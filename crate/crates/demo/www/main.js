import init, { sample_paths, meander_endpoint_law, pinning_path } from "./pkg/condwalk_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

function frame(canvas, lo, hi) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pad = 24;
  const y = (v) => h - pad - ((v - lo) / (hi - lo)) * (h - 2 * pad);
  const x = (t) => pad + t * (w - 2 * pad);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(x(0), y(0));
  ctx.lineTo(x(1), y(0));
  ctx.stroke();
  ctx.fillStyle = "#777";
  ctx.fillText(hi.toFixed(2), 2, y(hi) + 4);
  ctx.fillText(lo.toFixed(2), 2, y(lo));
  return { ctx, x, y };
}

function polyline(ctx, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((xv, i) => (i ? ctx.lineTo(xv, ys[i]) : ctx.moveTo(xv, ys[i])));
  ctx.stroke();
}

function report(id, fn) {
  const el = $(id);
  try {
    el.className = "out";
    el.textContent = fn();
  } catch (e) {
    el.className = "out err";
    el.textContent = String(e.message ?? e);
  }
}

function drawPaths() {
  report("paths-out", () => {
    const n = num("paths-n"), count = num("paths-count");
    const t0 = performance.now();
    const v = sample_paths($("kind").value, $("step").value, n, count, num("paths-seed"));
    const ms = performance.now() - t0;
    let lo = Math.min(0, ...v), hi = Math.max(0, ...v);
    if (hi - lo < 1e-9) hi = lo + 1;
    const { ctx, x, y } = frame($("paths-canvas"), lo, hi);
    for (let p = 0; p < count; p++) {
      const row = v.subarray(p * (n + 1), (p + 1) * (n + 1));
      polyline(ctx, Array.from(row, (_, i) => x(i / n)), Array.from(row, y), COLORS[p % COLORS.length]);
    }
    return `${count} paths of length ${n}, values s_i / (sigma sqrt N), ${ms.toFixed(0)} ms`;
  });
}

function drawEndpoint() {
  report("end-out", () => {
    const n = num("end-n");
    const v = meander_endpoint_law(n);
    const ks = v[v.length - 1];
    const atoms = [];
    for (let i = 0; i + 1 < v.length - 1; i += 2) atoms.push([v[i], v[i + 1]]);
    const width = atoms.length > 1 ? atoms[1][0] - atoms[0][0] : 1;
    const xmax = 4;
    const dens = atoms.map(([a, p]) => p / width);
    const hi = Math.max(...dens, 0.7);
    const { ctx, x, y } = frame($("end-canvas"), 0, hi);
    ctx.fillStyle = "#9ecae1";
    atoms.forEach(([a], i) => {
      if (a > xmax) return;
      ctx.fillRect(x(a / xmax), y(dens[i]), Math.max(1, x(width / xmax) - x(0)), y(0) - y(dens[i]));
    });
    const grid = Array.from({ length: 401 }, (_, i) => (i / 400) * xmax);
    polyline(ctx, grid.map((g) => x(g / xmax)), grid.map((g) => y(g * Math.exp(-g * g / 2))), "#d62728");
    return `exact meander endpoint law at N = ${n} (bars) vs Rayleigh density x e^(-x^2/2) (line); KS = ${ks.toFixed(5)}`;
  });
}

function drawPinning() {
  report("pin-out", () => {
    const n = num("pin-n"), beta = Number($("beta").value);
    const v = pinning_path(beta, $("variant").value, n, num("pin-seed"));
    const logZ = v[v.length - 1];
    const path = v.subarray(0, n + 1);
    let lo = Math.min(0, ...path), hi = Math.max(0, ...path);
    if (hi - lo < 1e-9) hi = lo + 0.1;
    const { ctx, x, y } = frame($("pin-canvas"), lo, hi);
    polyline(ctx, Array.from(path, (_, i) => x(i / n)), Array.from(path, y), COLORS[0]);
    const zeros = path.reduce((c, s) => c + (s === 0 ? 1 : 0), 0);
    return `beta = ${beta.toFixed(2)}: ${zeros} contacts with 0, log Z_N = ${logZ.toFixed(4)}`;
  });
}

await init();
$("paths-go").addEventListener("click", drawPaths);
$("end-go").addEventListener("click", drawEndpoint);
$("pin-go").addEventListener("click", drawPinning);
$("beta").addEventListener("input", drawPinning);
drawPaths();
drawEndpoint();
drawPinning();
