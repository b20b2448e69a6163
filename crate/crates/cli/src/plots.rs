//! Self-contained matplotlib scripts written next to the CSVs they read.
//! Run with `python3 plot_<name>.py` inside the output directory.

#[cfg(test)]
const PRELUDE: &str = r##"import io, os, sys
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))

def load(name):
    with open(os.path.join(HERE, name), encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    data = np.genfromtxt(io.StringIO("".join(rows)), delimiter=",", names=True, dtype=None, encoding="utf-8")
    return np.atleast_1d(data)

def save(fig, name):
    out = os.path.join(HERE, name)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)
"##;

macro_rules! script {
    ($body:expr) => {
        concat!(
            r##"import io, os, sys
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))

def load(name):
    with open(os.path.join(HERE, name), encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    data = np.genfromtxt(io.StringIO("".join(rows)), delimiter=",", names=True, dtype=None, encoding="utf-8")
    return np.atleast_1d(data)

def save(fig, name):
    out = os.path.join(HERE, name)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)
"##,
            $body
        )
    };
}

pub const AFFINE: &str = script!(
    r##"
d = load("affine.csv")
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].plot(d["t"], d["a"], label="a = V_x")
ax[0].plot(d["t"], d["b"], label="b = E_x")
ax[0].set_xlabel("t"); ax[0].legend()
ax[1].plot(d["t"], d["invC"])
ax[1].set_xlabel("t"); ax[1].set_ylabel("(a^2 + 2b - 1)/(1 - b)^2")
save(fig, "affine.png")
"##
);

pub const PHASE: &str = script!(
    r##"
f = load("direction_field.csv")
c = load("phase_curve.csv")
fig, ax = plt.subplots(figsize=(6, 5))
norm = np.hypot(f["db"], f["da"]) + 1e-300
ax.quiver(f["b"], f["a"], f["db"] / norm, f["da"] / norm, angles="xy", color="0.6")
ax.plot(c["b"], c["a"], "k")
ax.set_xlim(f["b"].min(), f["b"].max()); ax.set_ylim(f["a"].min(), f["a"].max())
ax.set_xlabel("b"); ax.set_ylabel("a")
save(fig, "phase.png")
"##
);

pub const CORRECTOR: &str = script!(
    r##"
d = load("corrector.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.loglog(1 - d["b"], d["alpha1"])
ax.set_xlabel("1 - b (density)"); ax.set_ylabel("alpha1")
save(fig, "corrector.png")
"##
);

pub const SIGMA0: &str = script!(
    r##"
d = load("sigma0.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(d["s"], d["sigma0"], "k", label="integrated")
ax.plot(d["s"], d["sigma0_closed"], "r--", label="closed form")
ax.set_xlabel("s"); ax.set_ylabel("sigma0"); ax.legend()
save(fig, "sigma0.png")
"##
);

pub const FIELD: &str = script!(
    r##"
d = load("snapshots.csv")
times = np.unique(d["t"])
pick = times[np.linspace(0, len(times) - 1, min(6, len(times))).astype(int)]
fig, ax = plt.subplots(1, 2, figsize=(11, 4))
for t in pick:
    s = d[d["t"] == t]
    ax[0].plot(s["x"], s["n"], label=f"t = {t:.3g}")
    ax[1].plot(s["x"], s["V"])
ax[0].set_yscale("log"); ax[0].set_xlabel("x"); ax[0].set_ylabel("n"); ax[0].legend(fontsize=7)
ax[1].set_xlabel("x"); ax[1].set_ylabel("V")
save(fig, "field.png")
m = load("min_q.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(m["t"], m["n"])
ax.set_xlabel("t"); ax.set_ylabel("density at min q")
save(fig, "min_q.png")
"##
);

pub const SWEEP: &str = script!(
    r##"
d = load("sweep.csv")
if d.size == 0 or "gamma" not in (d.dtype.names or ()):
    print("empty sweep"); sys.exit(0)
fig, ax = plt.subplots(figsize=(6, 4))
for eps in np.unique(d["epsilon"]):
    for dd in np.unique(d["d"]):
        s = d[(d["epsilon"] == eps) & (d["d"] == dd)]
        blow = np.array([v == "blowup" for v in s["verdict"]])
        ax.scatter(s["gamma"][blow], [eps] * blow.sum(), marker="x", color="r")
        ax.scatter(s["gamma"][~blow], [eps] * (~blow).sum(), marker="o", color="g")
ax.axvline(1.0, color="0.5", ls="--")
ax.set_xlabel("gamma"); ax.set_ylabel("epsilon")
save(fig, "sweep.png")
"##
);

pub const FIG1: &str = script!(
    r##"
f = load("fig1_direction_field.csv")
curves = [("--", "eps = 0", load("fig1_curve_undamped.csv")), ("-", "damped", load("fig1_curve_damped.csv"))]
fig, ax = plt.subplots(1, 2, figsize=(11, 4.5))
norm = np.hypot(f["db"], f["da"]) + 1e-300
ax[0].quiver(f["b"], f["a"], f["db"] / norm, f["da"] / norm, angles="xy", color="0.5")
ax[0].set_xlabel("b"); ax[0].set_ylabel("a")
for style, label, s in curves:
    ax[1].plot(s["b"], s["a"], "k" + style, label=label)
ax[1].set_xlim(f["b"].min(), f["b"].max()); ax[1].set_ylim(f["a"].min(), f["a"].max())
ax[1].set_xlabel("b"); ax[1].set_ylabel("a"); ax[1].legend()
save(fig, "fig1.png")
"##
);

pub const FIG2: &str = script!(
    r##"
d = load("fig2_series.csv")
fig, ax = plt.subplots(1, 2, figsize=(11, 4))
for eps, style in zip(np.unique(d["epsilon"]), ["--", "-"]):
    s = d[d["epsilon"] == eps]
    ax[0].plot(s["t"], s["b"], "k" + style, label=f"eps = {eps:g}")
    if eps > 0:
        ax[1].plot(s["t"], s["b"], "k")
ax[0].set_ylim(-20, 1); ax[0].set_xlabel("t"); ax[0].set_ylabel("b"); ax[0].legend()
ax[1].set_xlabel("t"); ax[1].set_ylabel("b (damped)")
save(fig, "fig2.png")
"##
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_share_the_prelude() {
        for s in [AFFINE, PHASE, CORRECTOR, SIGMA0, FIELD, SWEEP, FIG1, FIG2] {
            assert!(s.starts_with(PRELUDE));
        }
    }
}
