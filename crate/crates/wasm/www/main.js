import init, { poincare_walk, radius_series, sandwich_curves } from "./pkg/hyperwalk_wasm.js";

function params(section) {
  const out = {};
  for (const input of section.querySelectorAll("input")) out[input.name] = Number(input.value);
  return out;
}

function guarded(section, draw) {
  const msg = section.querySelector(".msg");
  return () => {
    msg.textContent = "";
    msg.className = "msg";
    try {
      draw(params(section), section.querySelector("canvas"), msg);
    } catch (e) {
      msg.textContent = e.message ?? String(e);
      msg.className = "msg err";
    }
  };
}

function polyline(ctx, xs, ys, sx, sy, colour) {
  ctx.strokeStyle = colour;
  ctx.beginPath();
  for (let i = 0; i < xs.length; i++) {
    const px = sx(xs[i]), py = sy(ys[i]);
    if (i === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
  }
  ctx.stroke();
}

function drawDisk(p, canvas, msg) {
  const pts = poincare_walk(p.k, p.a, p.b, p.steps, BigInt(p.seed));
  const ctx = canvas.getContext("2d");
  const h = canvas.width / 2, s = h - 10;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.arc(h, h, s, 0, 2 * Math.PI);
  ctx.stroke();
  const xs = [], ys = [];
  for (let i = 0; i < pts.length; i += 2) { xs.push(pts[i]); ys.push(pts[i + 1]); }
  polyline(ctx, xs, ys, (x) => h + s * x, (y) => h - s * y, "#c33");
  const n = xs.length - 1;
  const rho = Math.hypot(xs[n], ys[n]);
  msg.textContent = `${n} steps, final distance ${(2 * Math.atanh(rho) / p.k).toFixed(2)}`
    + (n < p.steps ? " (stopped at the boundary)" : "");
}

function drawRadius(p, canvas, msg) {
  const curved = radius_series(p.k, p.a, p.b, p.steps, BigInt(p.seed));
  const flat = radius_series(0, p.a, p.b, p.steps, BigInt(p.seed));
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const top = Math.max(...curved, ...flat, 1e-9);
  const sx = (i) => 30 + (canvas.width - 40) * i / p.steps;
  const sy = (r) => canvas.height - 20 - (canvas.height - 30) * r / top;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(30, 10, canvas.width - 40, canvas.height - 30);
  ctx.fillText(top.toFixed(1), 2, 16);
  ctx.fillText("0", 18, canvas.height - 20);
  const idx = (n) => Array.from({ length: n }, (_, i) => i);
  polyline(ctx, idx(flat.length), flat, sx, sy, "#36c");
  polyline(ctx, idx(curved.length), curved, sx, sy, "#c33");
  msg.textContent = `final distance: curved ${curved.at(-1).toFixed(2)}, flat ${flat.at(-1).toFixed(2)}`;
}

function drawSandwich(p, canvas) {
  const n = 201;
  const rows = sandwich_curves(p.k, p.d, n);
  const phi = [], lo = [], f = [], hi = [];
  for (let i = 0; i < rows.length; i += 4) {
    phi.push(rows[i]); lo.push(rows[i + 1]); f.push(rows[i + 2]); hi.push(rows[i + 3]);
  }
  const finite = [...lo, ...f, ...hi].filter(Number.isFinite);
  const ymin = Math.min(...finite), ymax = Math.max(...f) * 1.5 + 1e-9;
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const sx = (x) => 30 + (canvas.width - 40) * (x + 1) / 2;
  const sy = (y) => canvas.height - 20 - (canvas.height - 30) * (Math.min(y, ymax) - ymin) / (ymax - ymin);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(30, 10, canvas.width - 40, canvas.height - 30);
  ctx.fillText("φ = −1", 30, canvas.height - 4);
  ctx.fillText("φ = 1", canvas.width - 40, canvas.height - 4);
  polyline(ctx, phi, lo, sx, sy, "#888");
  polyline(ctx, phi, hi, sx, sy, "#888");
  polyline(ctx, phi, f, sx, sy, "#c33");
}

await init();
for (const [id, draw] of [["disk", drawDisk], ["radius", drawRadius], ["sandwich", drawSandwich]]) {
  const section = document.getElementById(id);
  const run = guarded(section, draw);
  section.querySelector("button")?.addEventListener("click", run);
  if (id === "sandwich") section.addEventListener("input", run);
  run();
}
