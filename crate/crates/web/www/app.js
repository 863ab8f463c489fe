import init, { presets, spectrum, reconstruct, cauchy } from "./pkg/sturm_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

// series: [{ x, y, label, dots }]
function plot(canvas, series) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr; canvas.height = h * dpr;
  const g = canvas.getContext("2d");
  g.scale(dpr, dpr);
  g.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x), ys = series.flatMap((s) => s.y);
  let [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  if (x1 - x0 < 1e-12) { x0 -= 1; x1 += 1; }
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const pad = 40;
  const X = (x) => pad + (x - x0) / (x1 - x0) * (w - 2 * pad);
  const Y = (y) => h - pad + (y0 - y) / (y1 - y0) * (h - 2 * pad);
  g.strokeStyle = "#999"; g.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  g.fillStyle = "#555"; g.font = "11px sans-serif";
  g.fillText(y1.toPrecision(3), 2, pad + 4); g.fillText(y0.toPrecision(3), 2, h - pad);
  g.fillText(x0.toPrecision(3), pad, h - pad + 14); g.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  series.forEach((s, k) => {
    g.strokeStyle = g.fillStyle = COLORS[k % COLORS.length];
    if (s.dots) {
      s.x.forEach((x, i) => { g.beginPath(); g.arc(X(x), Y(s.y[i]), 3.5, 0, 2 * Math.PI); g.fill(); });
    } else {
      g.beginPath();
      s.x.forEach((x, i) => (i ? g.lineTo(X(x), Y(s.y[i])) : g.moveTo(X(x), Y(s.y[i]))));
      g.stroke();
    }
    g.fillText(s.label, w - pad - 150, pad + 14 + 13 * k);
  });
}

function call(out, f) {
  out.classList.remove("err");
  out.textContent = "working...";
  // let the status paint before the synchronous solver runs
  return new Promise((res) => setTimeout(() => {
    const v = JSON.parse(f());
    if (v.error) { out.classList.add("err"); out.textContent = `${v.error}: ${v.message}`; res(null); }
    else res(v);
  }, 20));
}

const model = () => $("model").value;
const fmt = (x) => x.toExponential(6);

async function doSpectrum() {
  const v = await call($("o-spec"), () => spectrum(model(), +$("nmax").value));
  if (!v) return;
  const ev = v.eigenvalues, wt = v.weights;
  plot($("c-spec"), [{ x: ev.re, y: ev.im, label: "eigenvalues (complex plane)", dots: true }]);
  $("o-spec").textContent = ev.re.map((_, i) =>
    `${i + 1}\tlambda = ${fmt(ev.re[i])} ${fmt(ev.im[i])}i\talpha = ${fmt(wt.re[i])} ${fmt(wt.im[i])}i\tm = ${v.multiplicity[i]}`
  ).join("\n");
}

async function doInvert() {
  const v = await call($("o-inv"), () => reconstruct(model(), $("family").value, +$("t").value, 8));
  if (!v) return;
  plot($("c-inv"), [
    { x: v.x, y: v.sigma_tilde.re, label: "model sigma" },
    { x: v.x, y: v.sigma.re, label: "reconstructed Re sigma" },
    { x: v.x, y: v.sigma.im, label: "reconstructed Im sigma" },
  ]);
  $("o-inv").textContent =
    `N = ${v.n_cut}  delta = ${fmt(v.delta)}  tail = ${fmt(v.tail_l2)}  min rcond = ${fmt(v.min_condition)}\n` +
    `verified: ${v.verified}  lambda err = ${v.lambda_err}  alpha rel err = ${v.alpha_rel_err}\n` +
    `r1 coefficients: ${v.r1.re.map(fmt).join(", ")}\nr2 coefficients: ${v.r2.re.map(fmt).join(", ")}`;
}

async function doCauchy() {
  const v = await call($("o-cau"), () => cauchy(model(), +$("kf").value));
  if (!v) return;
  plot($("c-cau"), [
    { x: v.t, y: v.g.re, label: "Re G(t)" },
    { x: v.t, y: v.j.re, label: "Re J(t)" },
  ]);
  $("o-cau").textContent =
    `fit residual: ${fmt(v.fit.residual_0)} / ${fmt(v.fit.residual_1)}, held-out ${fmt(v.fit.held_out)}\n` +
    `C = ${v.c.re.map(fmt).join(", ")}\nD = ${v.d.re.map(fmt).join(", ")}`;
}

await init();
const list = JSON.parse(presets());
for (const p of list) $("model").add(new Option(p.name, p.name));
const about = () => ($("about").textContent = list.find((p) => p.name === model()).about);
$("model").onchange = about;
about();
$("go-spec").onclick = doSpectrum;
$("go-inv").onclick = doInvert;
$("go-cau").onclick = doCauchy;
