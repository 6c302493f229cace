import init, { presetConfig, generateSample, compareGraphSets, GlnSession } from "./pkg/gln_web.js";

const $ = (id) => document.getElementById(id);
const log = $("log");
let session = null;
let sessionConfig = null;

function show(text, isError = false) {
  log.textContent = text;
  log.className = isError ? "err" : "";
}

function guard(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      show(String(e), true);
    }
  };
}

function currentConfig() {
  const cfg = JSON.parse(presetConfig($("preset").value));
  cfg.seeds.data = Number($("seed").value);
  cfg.train.learning_rate = Number($("lr").value);
  cfg.model.layers = Number($("layers").value);
  cfg.loss.balance_mode = $("balance").value;
  return cfg;
}

// Node positions from the first two feature columns, or the pixel grid for images.
function layout(sample, canvas) {
  const n = sample.n;
  if (sample.family === "figures") {
    const side = Math.round(Math.sqrt(n));
    return sample.features.map((_, i) => [
      ((i % side) + 0.5) / side * canvas.width,
      (Math.floor(i / side) + 0.5) / side * canvas.height,
    ]);
  }
  const xs = sample.features.map((f) => f[0]);
  const ys = sample.features.map((f) => f[1]);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const pad = 20;
  const sx = (canvas.width - 2 * pad) / Math.max(x1 - x0, 1e-9);
  const sy = (canvas.height - 2 * pad) / Math.max(y1 - y0, 1e-9);
  return xs.map((x, i) => [pad + (x - x0) * sx, pad + (ys[i] - y0) * sy]);
}

function draw(canvas, sample, edges) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pos = layout(sample, canvas);
  for (const [i, j, p] of edges) {
    ctx.strokeStyle = `rgba(40, 80, 160, ${p ?? 0.7})`;
    ctx.beginPath();
    ctx.moveTo(...pos[i]);
    ctx.lineTo(...pos[j]);
    ctx.stroke();
  }
  pos.forEach(([x, y], i) => {
    const f = sample.features[i];
    ctx.fillStyle = sample.family === "figures"
      ? `rgb(${f.slice(0, 3).map((c) => Math.round(255 * Math.min(Math.max(c, 0), 1))).join(",")})`
      : "#333";
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  });
}

function fmt(obj) {
  return JSON.stringify(obj, (_, v) => (typeof v === "number" ? Number(v.toPrecision(5)) : v), 1);
}

$("gen").onclick = guard(() => {
  const sample = JSON.parse(generateSample(JSON.stringify(currentConfig()), Number($("index").value)));
  draw($("truth"), sample, sample.edges);
  $("pred").getContext("2d").clearRect(0, 0, 420, 420);
  const deg = sample.stats.degree_hist.map((v, d) => [d, v]).filter(([, v]) => v > 0);
  show(`${sample.family} ${sample.variant}: n = ${sample.n}, ${sample.edges.length} edges\n` +
    `degree histogram: ${deg.map(([d, v]) => `${d}:${v.toFixed(3)}`).join("  ")}`);
});

$("session").onclick = guard(() => {
  sessionConfig = currentConfig();
  session?.free();
  session = new GlnSession(JSON.stringify(sessionConfig));
  for (const id of ["train", "predict", "compare"]) $(id).disabled = false;
  $("testIndex").max = session.testSize() - 1;
  show(`session ready: ${session.testSize()} test samples`);
});

$("train").onclick = guard(() => {
  const losses = JSON.parse(session.trainEpochs(10));
  const last = losses[losses.length - 1];
  show(`epoch ${session.epochsDone()}: loss ${last.mean_total.toFixed(4)} ` +
    `(edge ${last.mean_edge.toFixed(4)}, dice ${last.mean_dice.toFixed(4)})`);
});

$("predict").onclick = guard(() => {
  const p = JSON.parse(session.predict(Number($("testIndex").value)));
  draw($("truth"), p.sample, p.sample.edges);
  draw($("pred"), p.sample, p.predicted);
  show(`predicted ${p.predicted.length} edges, truth ${p.sample.edges.length}\n${fmt(p.scores)}`);
});

$("compare").onclick = guard(() => {
  const preds = [];
  const truths = [];
  let n = 0;
  for (let i = 0; i < session.testSize(); i++) {
    const p = JSON.parse(session.predict(i));
    n = p.sample.n;
    preds.push(p.predicted.map(([a, b]) => [a, b]));
    truths.push(p.sample.edges);
  }
  const r = JSON.parse(compareGraphSets(JSON.stringify({ n, left: preds, right: truths })));
  show(`prediction vs ground truth over ${preds.length} test graphs\n${fmt(r.mmd)}`);
});

await init();
show("ready");
