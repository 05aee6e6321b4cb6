import init, {
  generate_geometry,
  explore_coarray,
  compare_image_addition,
  search_mra,
} from "./pkg/coarray_lab_wasm.js";

const $ = (id) => document.getElementById(id);

function call(fn, ...args) {
  const value = JSON.parse(fn(...args));
  if (value.error) throw new Error(value.error);
  return value;
}

function report(el, fn) {
  el.classList.remove("err");
  try {
    fn();
  } catch (e) {
    el.classList.add("err");
    el.textContent = e.message;
  }
}

function clear(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "12px system-ui, sans-serif";
  return ctx;
}

function sensorRow(ctx, positions, span, y, color, label, x0, w) {
  ctx.fillStyle = "#555";
  ctx.fillText(label, 4, y + 4);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(x0, y);
  ctx.lineTo(x0 + w, y);
  ctx.stroke();
  ctx.fillStyle = color;
  for (const p of positions) {
    ctx.beginPath();
    ctx.arc(x0 + (p / Math.max(span, 1)) * w, y, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawExplorer(r) {
  const canvas = $("ex-canvas");
  const ctx = clear(canvas);
  const x0 = 60;
  const w = canvas.width - x0 - 20;
  const span = r.coarray.positions[r.coarray.positions.length - 1];
  sensorRow(ctx, r.tx, span, 20, "#d62728", "Tx", x0, w);
  sensorRow(ctx, r.rx, span, 45, "#1f77b4", "Rx", x0, w);

  const base = canvas.height - 20;
  const top = 75;
  const maxM = Math.max(...r.coarray.multiplicities);
  ctx.fillStyle = "#555";
  ctx.fillText("sum", 4, base - 40);
  ctx.fillText(`max ${maxM}`, 4, top + 4);
  ctx.strokeStyle = "#2ca02c";
  ctx.fillStyle = "#2ca02c";
  r.coarray.positions.forEach((p, i) => {
    const x = x0 + (p / Math.max(span, 1)) * w;
    const y = base - (r.coarray.multiplicities[i] / maxM) * (base - top);
    ctx.beginPath();
    ctx.moveTo(x, base);
    ctx.lineTo(x, y);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  });
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(x0, base);
  ctx.lineTo(x0 + w, base);
  ctx.stroke();
}

function runExplorer() {
  const out = $("ex-out");
  report(out, () => {
    const r = call(explore_coarray, $("ex-tx").value, $("ex-rx").value);
    drawExplorer(r);
    const c = r.coarray;
    const red = c.redundancy
      ? `${c.redundancy.num}/${c.redundancy.den} = ${r.redundancy.toFixed(4)}`
      : `undefined (${c.reason})`;
    out.textContent =
      `${r.overlap.category.replace(/_/g, " ")}: ${r.tx.length} Tx, ${r.rx.length} Rx\n` +
      `sum co-array: ${c.positions.length} positions, contiguous prefix ${c.contiguous_prefix_len}\n` +
      `redundancy: ${red}`;
  });
}

function loadPreset() {
  report($("ex-out"), () => {
    const g = call(generate_geometry, $("ex-kind").value, +$("ex-a").value, +$("ex-b").value);
    $("ex-tx").value = g.tx.join(",");
    $("ex-rx").value = g.rx.join(",");
    runExplorer();
  });
}

function toDb(power, peak) {
  return power.map((p) => 10 * Math.log10(Math.max(p / peak, 1e-8)));
}

function drawPatterns(r) {
  const canvas = $("ia-canvas");
  const ctx = clear(canvas);
  const x0 = 50;
  const y0 = 10;
  const w = canvas.width - x0 - 10;
  const h = canvas.height - y0 - 30;
  const floor = -60;
  const peak = Math.max(...r.ula_power);
  const sx = (u) => x0 + ((u + 1) / 2) * w;
  const sy = (db) => y0 + (Math.min(0, Math.max(db, floor)) / floor) * h;

  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#555";
  for (let db = 0; db >= floor; db -= 10) {
    ctx.beginPath();
    ctx.moveTo(x0, sy(db));
    ctx.lineTo(x0 + w, sy(db));
    ctx.stroke();
    ctx.fillText(`${db} dB`, 4, sy(db) + 4);
  }
  for (const u of [-1, -0.5, 0, 0.5]) {
    ctx.fillText(`u=${u}`, sx(u) - 10, y0 + h + 18);
  }

  const curves = [
    [r.ula_power, "#222"],
    [r.sparse_uniform_power, "#d62728"],
    [r.sparse_synthesized_power, "#1f77b4"],
  ];
  for (const [power, color] of curves) {
    const db = toDb(power, peak);
    ctx.strokeStyle = color;
    ctx.lineWidth = color === "#1f77b4" ? 1.2 : 2;
    ctx.setLineDash(color === "#1f77b4" ? [5, 3] : []);
    ctx.beginPath();
    r.u.forEach((u, i) => (i ? ctx.lineTo(sx(u), sy(db[i])) : ctx.moveTo(sx(u), sy(db[i]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  ctx.lineWidth = 1;
}

function runSynthesis() {
  const out = $("ia-out");
  out.textContent = "synthesizing...";
  setTimeout(() =>
    report(out, () => {
      const r = call(compare_image_addition, $("ia-pos").value, +$("ia-grid").value, +$("ia-seed").value);
      drawPatterns(r);
      const table = r.attempts.map((a) => `  Q=${a.q}: residual ${a.best_residual.toExponential(2)}`).join("\n");
      out.textContent =
        `ULA ${r.ula_positions.length} sensors vs sparse ${r.sparse_positions.length} sensors\n` +
        `components needed: Q=${r.q}, residual ${r.residual.toExponential(2)}\n${table}`;
    }),
  );
}

function drawConfigs(configs, aperture) {
  const canvas = $("mra-canvas");
  canvas.height = Math.max(40, 22 * configs.length + 10);
  const ctx = clear(canvas);
  const x0 = 30;
  const w = canvas.width - x0 - 20;
  configs.forEach((c, i) => sensorRow(ctx, c, aperture, 16 + 22 * i, "#9467bd", `${i + 1}`, x0, w));
}

function runSearch() {
  const out = $("mra-out");
  out.textContent = "searching...";
  setTimeout(() =>
    report(out, () => {
      const r = call(search_mra, +$("mra-n").value, +$("mra-budget").value);
      drawConfigs(r.with_mirrors, r.aperture);
      out.textContent =
        `${r.complete ? "optimal" : "budget exhausted, best known"} aperture ${r.aperture}, ` +
        `sum co-array [0, ${r.coarray_size - 1}]\n` +
        `${r.stats.nodes} nodes, ${r.stats.wall_time_ms.toFixed(1)} ms\n` +
        r.with_mirrors.map((c) => `{${c.join(", ")}}`).join("\n");
    }),
  );
}

await init();
$("ex-preset").onclick = loadPreset;
$("ex-run").onclick = runExplorer;
$("ia-run").onclick = runSynthesis;
$("mra-run").onclick = runSearch;
runExplorer();
runSynthesis();
runSearch();
