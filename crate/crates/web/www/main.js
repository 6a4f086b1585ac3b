import init, { Demo, tauCurve } from "./pkg/sarprior_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#3060ff", "#f0d020", "#ff3030", "#a040ff"];
const IMAGE_SIZE = 200;

await init();
const demo = new Demo();

function status(text) {
  $("status").textContent = text;
}

function drawPoints(data) {
  const c = $("points");
  const g = c.getContext("2d");
  g.fillStyle = "#000";
  g.fillRect(0, 0, c.width, c.height);
  if (data.length === 0) return;
  let [x0, x1, y0, y1, imax] = [Infinity, -Infinity, Infinity, -Infinity, 0];
  for (let i = 0; i < data.length; i += 4) {
    x0 = Math.min(x0, data[i]); x1 = Math.max(x1, data[i]);
    y0 = Math.min(y0, data[i + 1]); y1 = Math.max(y1, data[i + 1]);
    imax = Math.max(imax, data[i + 2]);
  }
  const span = Math.max(x1 - x0, y1 - y0) * 1.1 || 1;
  const cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  for (let i = 0; i < data.length; i += 4) {
    const px = (data[i] - cx) / span * c.width + c.width / 2;
    const py = c.height / 2 - (data[i + 1] - cy) / span * c.height;
    g.globalAlpha = 0.15 + 0.85 * Math.sqrt(data[i + 2] / imax);
    g.fillStyle = COLORS[Math.min(data[i + 3], 4) - 1];
    g.fillRect(px, py, 1.5, 1.5);
  }
  g.globalAlpha = 1;
}

function drawImage() {
  const rgba = demo.imageRgba(IMAGE_SIZE, IMAGE_SIZE, $("log").checked, $("max").checked);
  const off = new OffscreenCanvas(IMAGE_SIZE, IMAGE_SIZE);
  off.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), IMAGE_SIZE, IMAGE_SIZE), 0, 0);
  const c = $("image");
  const g = c.getContext("2d");
  g.imageSmoothingEnabled = false;
  g.drawImage(off, 0, 0, c.width, c.height);
}

function trace() {
  $("az-val").textContent = $("az").value;
  try {
    const t0 = performance.now();
    const n = demo.trace(+$("az").value, +$("dep").value, +$("rays").value, +$("zeta").value, +$("kmax").value, +$("seed").value);
    drawPoints(demo.points());
    drawImage();
    status(`${n} points in ${(performance.now() - t0).toFixed(0)} ms`);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
}

function drawTau() {
  const c = $("tau");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  let curve;
  try {
    curve = tauCurve(+$("tt").value, +$("tm").value, 201);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
    return;
  }
  const pad = 24, w = c.width - 2 * pad, h = c.height - 2 * pad;
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.fillText("-1", pad - 6, c.height - 8);
  g.fillText("1", pad + w - 3, c.height - 8);
  g.fillText("1", 8, pad + 4);
  g.fillText("0", 8, pad + h + 4);
  g.strokeStyle = "#c03";
  g.lineWidth = 2;
  g.beginPath();
  curve.forEach((tau, i) => {
    const x = pad + (i / (curve.length - 1)) * w;
    const y = pad + h - tau * h;
    i === 0 ? g.moveTo(x, y) : g.lineTo(x, y);
  });
  g.stroke();
}

for (const id of ["az", "dep", "rays", "zeta", "kmax", "seed"]) $(id).addEventListener("change", trace);
$("az").addEventListener("input", trace);
for (const id of ["log", "max"]) $(id).addEventListener("change", () => { try { drawImage(); } catch (e) { status(`error: ${e.message ?? e}`); } });
for (const id of ["tt", "tm"]) $(id).addEventListener("input", drawTau);
$("mesh").addEventListener("change", async (ev) => {
  const file = ev.target.files[0];
  if (!file) return;
  try {
    const faces = demo.loadObj(await file.text());
    status(`${file.name}: ${faces} faces`);
    trace();
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
});

trace();
drawTau();
