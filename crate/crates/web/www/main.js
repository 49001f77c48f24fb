// Build: cargo build -p meco-web --release --target wasm32-unknown-unknown &&
//   wasm-bindgen target/wasm32-unknown-unknown/release/meco_web.wasm --target web --out-dir crates/web/www/pkg
import init, { allocate, hreye, depthStep, thrusterIds } from "./pkg/meco_web.js";

const $ = (id) => document.getElementById(id);

function runAllocation() {
  const off = [...document.querySelectorAll("#enabled input")].filter((c) => !c.checked).map((c) => c.value);
  const w = ["fx", "fy", "fz", "tx", "ty", "tz"].map((k) => Number($(k).value));
  try {
    const a = JSON.parse(allocate(...w, off.join(",")));
    const max = Math.max(1e-9, ...a.thrusts.map(Math.abs));
    $("alloc-out").innerHTML =
      "<tr><th>thruster</th><th>N</th><th></th></tr>" +
      a.ids
        .map((id, i) => {
          const u = a.thrusts[i];
          const width = Math.round((120 * Math.abs(u)) / max);
          return `<tr><td>${id}</td><td>${u.toFixed(2)}</td><td><span class="bar ${u < 0 ? "neg" : ""}" style="width:${width}px"></span></td></tr>`;
        })
        .join("");
    const res = Math.hypot(...a.residual);
    $("alloc-summary").textContent =
      `rank ${a.rank}, saturation scale ${a.scale.toFixed(3)}, unreachable part |r| = ${res.toFixed(3)}`;
    $("alloc-summary").className = "";
  } catch (e) {
    $("alloc-summary").textContent = String(e);
    $("alloc-summary").className = "err";
  }
}

function drawRings(t) {
  const s = JSON.parse(hreye($("pattern").value, t));
  const ctx = $("rings").getContext("2d");
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, 260, 260);
  const ring = (leds, radius, dot) =>
    leds.forEach(([r, g, b], i) => {
      // Index 0 at the top, clockwise.
      const a = (2 * Math.PI * i) / leds.length - Math.PI / 2;
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      ctx.beginPath();
      ctx.arc(130 + radius * Math.cos(a), 130 + radius * Math.sin(a), dot, 0, 2 * Math.PI);
      ctx.fill();
    });
  ring(s.outer_ring, 110, 9);
  ring(s.inner_ring, 70, 8);
}

function runStep() {
  try {
    const target = Number($("target").value);
    const r = JSON.parse(depthStep(target, Number($("density").value), Number($("duration").value), 7));
    const ctx = $("plot").getContext("2d");
    const W = 820, H = 260, pad = 30;
    ctx.clearRect(0, 0, W, H);
    const tmax = r.time[r.time.length - 1];
    const dmax = Math.max(target, ...r.depth) * 1.1;
    const x = (t) => pad + ((W - 2 * pad) * t) / tmax;
    const y = (d) => pad + ((H - 2 * pad) * d) / dmax; // depth grows downward
    ctx.strokeStyle = "#aaa";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(x(0), y(target));
    ctx.lineTo(x(tmax), y(target));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.strokeStyle = "#048";
    ctx.beginPath();
    r.time.forEach((t, i) => (i ? ctx.lineTo(x(t), y(r.depth[i])) : ctx.moveTo(x(t), y(r.depth[i]))));
    ctx.stroke();
    const last = r.depth[r.depth.length - 1];
    $("step-summary").textContent = `final depth ${last.toFixed(3)} m after ${tmax.toFixed(1)} s`;
    $("step-summary").className = "";
  } catch (e) {
    $("step-summary").textContent = String(e);
    $("step-summary").className = "err";
  }
}

await init();

for (const id of JSON.parse(thrusterIds())) {
  const label = document.createElement("label");
  label.innerHTML = `<input type="checkbox" value="${id}" checked> ${id}`;
  $("enabled").appendChild(label);
}
document.querySelectorAll("#alloc input").forEach((el) => el.addEventListener("input", runAllocation));
$("run").addEventListener("click", runStep);
runAllocation();
runStep();

const t0 = performance.now();
(function frame() {
  drawRings((performance.now() - t0) / 1000);
  requestAnimationFrame(frame);
})();
