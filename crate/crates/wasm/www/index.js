// Expects the output of `wasm-bindgen --target web` in ./pkg.
import init, { costTable, orbitView, classBalance } from "./pkg/varord_wasm.js";

const $ = (id) => document.getElementById(id);

function fail(el, e) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(e);
  el.appendChild(p);
}

function table(headers, rows, highlight) {
  const t = document.createElement("table");
  const head = t.insertRow();
  for (const h of headers) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  rows.forEach((row, i) => {
    const tr = t.insertRow();
    if (highlight(i)) tr.className = "best";
    for (const cell of row) tr.insertCell().textContent = cell;
  });
  return t;
}

function showCosts() {
  const out = $("costs");
  try {
    const v = JSON.parse(costTable($("system").value));
    out.innerHTML = "";
    const rows = v.orderings.map((o) => [
      o.label,
      o.ordering.join(" > "),
      o.cost.per_level.map((l) => l.num_polys).join(" / "),
      o.cost.total_polys,
      o.cost.total_sotd,
    ]);
    out.appendChild(table(["label", "eliminate", "polys per level", "polys", "sotd"], rows, (i) => i === v.best_label));
    const note = document.createElement("p");
    note.textContent = `features ${v.features.map((x) => +x.toFixed(3)).join(", ")}` + (v.tie ? " (cheapest ordering is tied)" : "");
    out.appendChild(note);
  } catch (e) {
    fail(out, e);
  }
}

function showOrbit() {
  const out = $("orbit-out");
  try {
    const members = JSON.parse(orbitView($("system").value));
    out.innerHTML = "";
    const rows = members.map((m) => [m.id, `[${m.perm.join(" ")}]`, m.system, m.label, m.sotd.join(" ")]);
    out.appendChild(table(["id", "perm", "system", "label", "sotd per label"], rows, () => false));
  } catch (e) {
    fail(out, e);
  }
}

function bars(canvas, counts, title) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#222";
  ctx.font = "13px system-ui";
  ctx.fillText(title, 8, 16);
  const max = Math.max(1, ...counts);
  const slot = (width - 16) / counts.length;
  counts.forEach((c, i) => {
    const h = ((height - 50) * c) / max;
    const x = 8 + i * slot;
    ctx.fillStyle = "#4a7bb7";
    ctx.fillRect(x + 4, height - 20 - h, slot - 8, h);
    ctx.fillStyle = "#222";
    ctx.fillText(String(i), x + slot / 2 - 4, height - 6);
    ctx.fillText(String(c), x + 4, height - 24 - h);
  });
}

function showBalance() {
  const msg = $("balance-msg");
  try {
    const v = JSON.parse(classBalance(Number($("count").value), Number($("seed").value)));
    const ratio = (r) => (r === null ? "undefined" : r.toFixed(2));
    msg.textContent = `imbalance ratio: skewed sample ${ratio(v.biased_ratio)}, augmented ${ratio(v.augmented_ratio)}`;
    msg.className = "";
    bars($("biased"), v.biased, "skewed sample");
    bars($("augmented"), v.augmented, "augmented roots");
  } catch (e) {
    msg.textContent = String(e);
    msg.className = "err";
  }
}

await init();
$("rank").addEventListener("click", showCosts);
$("orbit").addEventListener("click", showOrbit);
$("balance").addEventListener("click", showBalance);
showCosts();
