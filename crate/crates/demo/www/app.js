import init, { draw_example, analyze, volume_curve } from "./pkg/pathbounds_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let truth = null;

function status(msg) {
  $("status").textContent = msg;
}

function frame(ctx, w, h, pad, xmin, xmax, ymin, ymax) {
  const sx = (x) => pad + ((x - xmin) / (xmax - xmin)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - ymin) / (ymax - ymin)) * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  for (let i = 0; i <= 5; i++) {
    const y = ymin + ((ymax - ymin) * i) / 5;
    ctx.fillText(y.toFixed(2), 4, sy(y) + 4);
  }
  return { sx, sy };
}

function area(ctx, sx, sy, lower, upper, fill) {
  ctx.fillStyle = fill;
  ctx.beginPath();
  upper.forEach((u, i) => (i ? ctx.lineTo(sx(i + 1), sy(u)) : ctx.moveTo(sx(1), sy(u))));
  for (let i = lower.length - 1; i >= 0; i--) ctx.lineTo(sx(i + 1), sy(lower[i]));
  ctx.closePath();
  ctx.fill();
}

function line(ctx, sx, sy, ys, stroke, dash = []) {
  ctx.strokeStyle = stroke;
  ctx.setLineDash(dash);
  ctx.lineWidth = 2;
  ctx.beginPath();
  ys.forEach((y, i) => (i ? ctx.lineTo(sx(i + 1), sy(y)) : ctx.moveTo(sx(1), sy(y))));
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.lineWidth = 1;
}

function plotBands(doc, betaHat) {
  const canvas = $("bands");
  const ctx = canvas.getContext("2d");
  const byKind = Object.fromEntries(doc.bands.map((b) => [b.kind, b]));
  const all = doc.bands.flatMap((b) => b.lower.concat(b.upper)).concat(truth || []);
  const pad = 40;
  const H = betaHat.length;
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const { sx, sy } = frame(ctx, canvas.width, canvas.height, pad, 0.5, H + 0.5, lo, hi);

  area(ctx, sx, sy, byKind.supt.lower, byKind.supt.upper, "#d9e4f2");
  area(ctx, sx, sy, byKind.pointwise.lower, byKind.pointwise.upper, "#9fb7d9");
  area(ctx, sx, sy, byKind.restricted_posi.lower, byKind.restricted_posi.upper, "rgba(214,72,60,0.28)");
  line(ctx, sx, sy, byKind.cumulative.lower, "#2a9d4b", [6, 4]);
  line(ctx, sx, sy, byKind.cumulative.upper, "#2a9d4b", [6, 4]);
  if (truth && truth.length === H) line(ctx, sx, sy, truth, "#1f4fa0");
  line(ctx, sx, sy, byKind.restricted_posi.center, "#c0392b", [2, 3]);
  ctx.fillStyle = "#000";
  betaHat.forEach((b, i) => {
    ctx.beginPath();
    ctx.arc(sx(i + 1), sy(b), 2.5, 0, 2 * Math.PI);
    ctx.fill();
  });

  const sel = doc.selection;
  const model = Object.entries(sel.chosen_model)
    .map(([k, v]) => (typeof v === "number" ? `${k}=${Number.isInteger(v) ? v : v.toPrecision(4)}` : v))
    .join(", ");
  const rows = [
    ["selected model", model],
    ["selected df", sel.df.toFixed(2)],
    ["sup-t critical value", byKind.supt.critical_value.toFixed(3)],
    ["PoSI constant", byKind.restricted_posi.critical_value.toFixed(3)],
    ["Wald test of β = 0, p-value", doc.wald_zero.p_value.toExponential(2)],
    ["cumulative effect interval", `[${doc.cumulative.l.toFixed(3)}, ${doc.cumulative.u.toFixed(3)}]`],
  ];
  $("summary").innerHTML = rows.map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`).join("");
}

function plotVolume(points) {
  const canvas = $("vol");
  const ctx = canvas.getContext("2d");
  const ys = points.map((p) => p.log10_ratio);
  const pad = 40;
  const { sx, sy } = frame(ctx, canvas.width, canvas.height, pad, 1, Math.max(2, points.length), Math.min(...ys, -1), 0);
  ctx.fillText("log10 ratio", pad + 4, pad - 8);
  ctx.strokeStyle = "#1f4fa0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  points.forEach((p, i) => (i ? ctx.lineTo(sx(p.h), sy(p.log10_ratio)) : ctx.moveTo(sx(p.h), sy(p.log10_ratio))));
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#444";
  points.forEach((p) => ctx.fillText(String(p.h), sx(p.h) - 4, canvas.height - pad + 14));
}

function timed(label, f) {
  status(`${label}…`);
  setTimeout(() => {
    const t0 = performance.now();
    try {
      f();
      status(`${label} took ${((performance.now() - t0) / 1000).toFixed(1)} s`);
    } catch (e) {
      status(`error: ${e}`);
    }
  }, 10);
}

function drawEstimate() {
  const ex = JSON.parse(draw_example($("dgp").value, num("horizon"), num("sigma2"), num("rho"), num("seed")));
  truth = ex.truth;
  $("estimate").value = JSON.stringify(ex.estimate);
}

function runBands() {
  const text = $("estimate").value;
  const betaHat = JSON.parse(text).beta_hat;
  if (!truth || truth.length !== betaHat.length) truth = null;
  const doc = JSON.parse(analyze(text, num("alpha"), num("draws"), num("seed")));
  plotBands(doc, betaHat);
}

await init();
$("draw").onclick = () => timed("drawing", drawEstimate);
$("run").onclick = () => timed("computing bands", runBands);
$("estimate").oninput = () => (truth = null);
$("volume").onclick = () =>
  timed("simulating critical values", () =>
    plotVolume(JSON.parse(volume_curve(num("vrho"), num("vmax"), 0.05, 20000, num("seed"))))
  );
drawEstimate();
timed("computing bands", runBands);
