import init, { confounding, learn, refute, models } from "./pkg/causal_cohort_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(out, fn) {
  try {
    fn();
  } catch (e) {
    out.innerHTML = `<p class="err">${e.message ?? e}</p>`;
  }
}

function bars(rows) {
  const max = Math.max(...rows.map((r) => Math.abs(r.value)), 1e-9);
  return rows
    .map((r) => `<div>${r.label}: ${r.value.toFixed(3)}</div>
      <div class="bar ${r.cls ?? ""}" style="width:${(Math.abs(r.value) / max) * 100}%"></div>`)
    .join("");
}

function runConfounding() {
  const out = $("c-out");
  show(out, () => {
    const r = JSON.parse(confounding(num("c-n"), num("c-seed"), num("c-conf"), num("c-eff"), num("c-zy")));
    out.innerHTML = bars([
      { label: "true effect", value: r.truth },
      { label: "naive", value: r.naive, cls: "naive" },
      { label: "adjusted for Z", value: r.adjusted },
    ]) + `<p>bias: naive ${r.naive_bias.toFixed(3)}, adjusted ${r.adjusted_bias.toFixed(3)}</p>`;
  });
}

// nodes on a circle, edges as lines; arrowheads for directed edges
function drawGraph(title, g, shd) {
  const size = 170, r = 58, c = size / 2;
  const pos = {};
  g.nodes.forEach((n, i) => {
    const a = (2 * Math.PI * i) / g.nodes.length - Math.PI / 2;
    pos[n] = [c + r * Math.cos(a), c + r * Math.sin(a)];
  });
  const line = ([a, b], directed) => {
    const [x1, y1] = pos[a], [x2, y2] = pos[b];
    const d = Math.hypot(x2 - x1, y2 - y1), k = 14 / d;
    const ex = x2 - (x2 - x1) * k, ey = y2 - (y2 - y1) * k;
    const sx = x1 + (x2 - x1) * k, sy = y1 + (y2 - y1) * k;
    return `<line x1="${sx}" y1="${sy}" x2="${ex}" y2="${ey}" stroke="${directed ? "#222" : "#999"}"
      stroke-width="1.6" ${directed ? 'marker-end="url(#arrow)"' : ""}/>`;
  };
  const nodes = g.nodes
    .map((n) => `<circle cx="${pos[n][0]}" cy="${pos[n][1]}" r="12" fill="#fff" stroke="#4a7bd0"/>
      <text x="${pos[n][0]}" y="${pos[n][1] + 4}" text-anchor="middle" font-size="12">${n}</text>`)
    .join("");
  const caption = shd === undefined ? title : `${title} (SHD ${shd})`;
  return `<figure><svg width="${size}" height="${size}">
    <defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto">
      <path d="M0,0 L10,5 L0,10 z" fill="#222"/></marker></defs>
    ${g.directed.map((e) => line(e, true)).join("")}
    ${g.undirected.map((e) => line(e, false)).join("")}
    ${nodes}</svg><figcaption>${caption}</figcaption></figure>`;
}

function runLearn() {
  const out = $("l-out");
  show(out, () => {
    const r = JSON.parse(learn($("l-model").value, num("l-n"), num("l-seed"), num("l-thr"), num("l-alpha")));
    out.innerHTML =
      drawGraph("truth", r.truth) +
      r.learners.map((l) => drawGraph(l.name, l.result.graph, l.result.shd)).join("") +
      drawGraph("consensus", r.consensus.graph, r.consensus.shd) +
      drawGraph("consensus DAG", r.consensus_dag);
  });
}

function runRefute() {
  const out = $("r-out");
  show(out, () => {
    const r = JSON.parse(refute(num("r-n"), num("r-seed"), num("r-st"), num("r-sy")));
    const rep = r.report;
    const flag = (ok) => `<span class="${ok ? "pass" : "fail"}">${ok ? "pass" : "fail"}</span>`;
    out.innerHTML = `<pre>${r.lines.join("\n")}</pre>
      <p>random common cause ${flag(rep.pass_random_common_cause)},
      placebo ${flag(rep.pass_placebo)}, subset ${flag(rep.pass_subset)}
      (tolerances ${rep.tol_same} and ${rep.tol_zero})</p>`;
  });
}

await init();
for (const name of JSON.parse(models())) {
  $("l-model").add(new Option(name, name));
}
for (const id of ["c-conf", "c-eff", "c-zy"]) {
  const label = () => ($(`${id}-v`).textContent = $(id).value);
  $(id).addEventListener("input", () => { label(); runConfounding(); });
  label();
}
$("c-run").addEventListener("click", runConfounding);
$("l-run").addEventListener("click", runLearn);
$("r-run").addEventListener("click", runRefute);
runConfounding();
