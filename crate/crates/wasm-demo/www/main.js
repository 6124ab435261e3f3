import init, { counterexample_run, fleet_sweep, sample_demand } from "./pkg/fleetroll_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value) >>> 0;
const hhmm = (s) => `${String(Math.floor(s / 3600) % 24).padStart(2, "0")}:${String(Math.floor(s / 60) % 60).padStart(2, "0")}`;

function call(f, ...args) {
  const v = JSON.parse(f(...args));
  if (v.error) throw new Error(v.error);
  return v;
}

// Lets the button label repaint before a long synchronous call.
function busy(button, work) {
  const label = button.textContent;
  button.disabled = true;
  button.textContent = "running...";
  setTimeout(() => {
    try {
      work();
    } catch (e) {
      alert(e.message);
    } finally {
      button.disabled = false;
      button.textContent = label;
    }
  }, 20);
}

function runCounterexample() {
  const v = call(counterexample_run);
  const lines = v.requests.map((r) => `r${r.id}: ${r.pickup} -> ${r.dropoff}, enters ${hhmm(r.entry)}, wants ${hhmm(r.desired)}`);
  const ids = (xs) => (xs.length ? xs.map((x) => "r" + x).join(", ") : "none");
  lines.push("");
  lines.push(`single pass:          ${v.single_pass} robots, greedy rejects ${ids(v.rejected_at_single_pass)}`);
  lines.push(`restart and optimize: ${v.restart_and_optimize} robots, greedy rejects ${ids(v.rejected_at_restart)}`);
  $("ce-out").textContent = lines.join("\n");
}

function runSweep() {
  const v = call(fleet_sweep, num("sw-days"), num("sw-seed"), num("sw-scen"));
  const policies = Object.keys(v.rejections);
  let html = `<p>${v.days} days, ${v.requests} requests, sized fleet ${v.fleet}</p><table><tr><th>fleet</th>`;
  html += policies.map((p) => `<th>${p} rejections</th>`).join("") + "</tr>";
  for (let f = 1; f <= v.fleet; f++) {
    html += `<tr><td>${f}</td>` + policies.map((p) => `<td>${v.rejections[p][f - 1]}</td>`).join("") + "</tr>";
  }
  $("sw-out").innerHTML = html + "</table>";
}

function runSample() {
  const v = call(sample_demand, num("sd-hour"), num("sd-n"), num("sd-seed"));
  const counts = v.scenarios.map((s) => s.length);
  const mean = counts.reduce((a, b) => a + b, 0) / counts.length;
  $("sd-summary").textContent = `requests per scenario: ${counts.join(", ")} (mean ${mean.toFixed(1)})`;

  const canvas = $("sd-map");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const xs = v.nodes.map((n) => n.x), ys = v.nodes.map((n) => n.y);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const pad = 30;
  const at = {};
  for (const n of v.nodes) {
    at[n.id] = [
      pad + ((n.x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad),
      pad + ((n.y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad),
    ];
  }
  ctx.fillStyle = "#bbb";
  for (const n of v.nodes) ctx.fillRect(at[n.id][0] - 1.5, at[n.id][1] - 1.5, 3, 3);

  const picks = {}, drops = {};
  for (const s of v.scenarios) {
    for (const r of s) {
      picks[r.pickup] = (picks[r.pickup] || 0) + 1;
      drops[r.dropoff] = (drops[r.dropoff] || 0) + 1;
    }
  }
  const radius = (c) => 2 + 2.2 * Math.sqrt(c / v.scenarios.length);
  ctx.fillStyle = "rgba(30, 100, 200, 0.6)";
  for (const [id, c] of Object.entries(picks)) {
    ctx.beginPath();
    ctx.arc(at[id][0], at[id][1], radius(c), 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.strokeStyle = "rgba(200, 60, 30, 0.8)";
  for (const [id, c] of Object.entries(drops)) {
    ctx.beginPath();
    ctx.arc(at[id][0], at[id][1], radius(c) + 2, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.fillStyle = "#222";
  for (const d of v.depots) ctx.fillRect(at[d][0] - 5, at[d][1] - 5, 10, 10);
}

await init();
$("ce-run").onclick = (e) => busy(e.target, runCounterexample);
$("sw-run").onclick = (e) => busy(e.target, runSweep);
$("sd-run").onclick = (e) => busy(e.target, runSample);
