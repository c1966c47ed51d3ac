import init, { cavity_speed, coarse_dimension, coarse_basis, gmres_history } from "./pkg/nsprec_wasm.js";

const BASIS_CELLS = 24;
const BASIS_PER_UNIT = 3;

function $(id) {
  return document.getElementById(id);
}

// Blue to red colour map on [lo, hi].
function colour(v, lo, hi) {
  const t = hi > lo ? Math.min(1, Math.max(0, (v - lo) / (hi - lo))) : 0;
  return [Math.round(255 * t), Math.round(80 * (1 - Math.abs(2 * t - 1))), Math.round(255 * (1 - t))];
}

// Draws a row-major side x side lattice with y pointing up.
function heatmap(canvas, values, side) {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(side, side);
  for (let r = 0; r < side; r++) {
    for (let c = 0; c < side; c++) {
      const [red, green, blue] = colour(values[r * side + c], lo, hi);
      const k = 4 * ((side - 1 - r) * side + c);
      img.data.set([red, green, blue, 255], k);
    }
  }
  const off = new OffscreenCanvas(side, side);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  return [lo, hi];
}

function plotHistories(canvas, series) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const maxIt = Math.max(...series.map((s) => s.values.length), 1);
  const lo = -10;
  const y = (v) => h * (Math.log10(Math.max(v, 1e-10)) / lo);
  ctx.strokeStyle = "#ddd";
  for (let d = 0; d >= lo; d -= 2) {
    ctx.beginPath();
    ctx.moveTo(0, y(10 ** d));
    ctx.lineTo(w, y(10 ** d));
    ctx.stroke();
  }
  for (const s of series) {
    ctx.strokeStyle = s.colour;
    ctx.beginPath();
    ctx.moveTo(0, y(1));
    s.values.forEach((v, i) => ctx.lineTo((w * (i + 1)) / maxIt, y(v)));
    ctx.stroke();
  }
}

function runCavity() {
  const hr = Number($("cav-h").value);
  const s = Number($("cav-s").value);
  const nu = Number($("cav-nu").value);
  $("cav-out").textContent = "solving...";
  setTimeout(() => {
    try {
      const t = performance.now();
      const out = cavity_speed(hr, s, nu);
      const avg = out[out.length - 1];
      const side = 2 * hr * s + 1;
      const [, hi] = heatmap($("cav-canvas"), out.subarray(0, side * side), side);
      const ms = (performance.now() - t).toFixed(0);
      $("cav-out").textContent = `max speed ${hi.toFixed(3)}, ${avg.toFixed(1)} GMRES iterations per Newton step, ${ms} ms`;
    } catch (e) {
      $("cav-out").textContent = `error: ${e.message ?? e}`;
    }
  }, 0);
}

function refreshBasis(resetColumn) {
  const kind = $("basis-kind").value;
  const slider = $("basis-col");
  if (resetColumn) {
    const dim = coarse_dimension(BASIS_CELLS, BASIS_PER_UNIT, kind);
    slider.max = String(dim - 1);
    slider.value = "0";
  }
  const col = Number(slider.value);
  const values = coarse_basis(BASIS_CELLS, BASIS_PER_UNIT, kind, col);
  heatmap($("basis-canvas"), values, BASIS_CELLS + 1);
  $("basis-out").textContent = `${col + 1} / ${Number(slider.max) + 1}`;
}

function runGmres() {
  const n = Number($("gm-n").value);
  const s = Number($("gm-s").value);
  const o = Number($("gm-o").value);
  $("gm-out").textContent = "solving...";
  setTimeout(() => {
    try {
      const series = [
        { name: "one-level", kind: "none", colour: "#c33" },
        { name: "GDSW", kind: "gdsw", colour: "#36c" },
        { name: "RGDSW", kind: "rgdsw", colour: "#393" },
      ].map((c) => ({ ...c, values: gmres_history(n, s, o, c.kind) }));
      plotHistories($("gm-canvas"), series);
      $("gm-out").textContent = series.map((c) => `${c.name}: ${c.values.length} iterations`).join(", ");
    } catch (e) {
      $("gm-out").textContent = `error: ${e.message ?? e}`;
    }
  }, 0);
}

await init();
$("cav-run").addEventListener("click", runCavity);
$("basis-kind").addEventListener("change", () => refreshBasis(true));
$("basis-col").addEventListener("input", () => refreshBasis(false));
$("gm-run").addEventListener("click", runGmres);
refreshBasis(true);
