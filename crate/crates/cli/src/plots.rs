//! Optional matplotlib scripts. The CSV files are the contract; these are a
//! convenience that reads them from the script's own directory.

use crate::config::Study;
use crate::output::Bundle;

const PRELUDE: &str = r#"#!/usr/bin/env python3
import os
import numpy as np
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    return np.genfromtxt(os.path.join(HERE, name), delimiter=",", names=True, dtype=None, encoding=None)


def wigner(name, ax):
    # header row holds x, first column holds y
    raw = np.genfromtxt(os.path.join(HERE, name), delimiter=",")
    xs, ys, w = raw[0, 1:], raw[1:, 0], raw[1:, 1:]
    m = np.abs(w).max()
    ax.contourf(xs, ys, w, 40, cmap="RdBu_r", vmin=-m, vmax=m)
    ax.set_aspect("equal")
    ax.set_title(name)

"#;

pub fn script(study: &Study, bundle: &Bundle) -> String {
    let mut s = String::from(PRELUDE);
    let wigners: Vec<&str> = bundle.names().filter(|n| n.starts_with("wigner") && n.ends_with(".csv")).collect();
    let body = match study {
        Study::Hysteresis(_) => {
            r#"d = load("hysteresis.csv")
for col in ("n_exact", "n_master", "n_up", "n_down"):
    if col in d.dtype.names:
        plt.plot(d["omega"], d[col], label=col)
plt.xlabel("omega / gamma")
plt.ylabel("n")
plt.legend()
"#
        }
        Study::LyapunovSweep(_) => {
            r#"d = load("lyapunov.csv")
for conv in np.unique(d["convention"]):
    for smp in np.unique(d["sampling"]):
        sel = (d["convention"] == conv) & (d["sampling"] == smp)
        plt.plot(d["omega"][sel], d["exponent"][sel], marker=".", label=f"{conv} {smp}")
plt.axhline(0, color="k", lw=0.5)
plt.xlabel("omega / gamma")
plt.ylabel("L")
plt.legend()
"#
        }
        Study::MinMaxExcitation(_) => {
            r#"d = load("minmax.csv")
for col in d.dtype.names[1:]:
    if col != "regime":
        plt.plot(d["omega"], d[col], label=col)
plt.xlabel("omega / gamma")
plt.ylabel("n")
plt.legend()
"#
        }
        Study::Purity(_) => {
            r#"d = load("purity.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(9, 4))
w = d["scan"] == "width"
a.plot(d["width"][w], d["purity_mean"][w], marker="o")
a.set_xlabel("T")
b.plot(d["period"][~w], d["purity_mean"][~w], marker="o")
b.set_xlabel("tau")
a.set_ylabel("Tr rho^2")
"#
        }
        _ => "",
    };
    s.push_str(body);
    if !wigners.is_empty() {
        s.push_str(&format!(
            "names = {:?}\nfig, axes = plt.subplots(1, len(names), figsize=(4 * len(names), 4), squeeze=False)\n\
             for name, ax in zip(names, axes[0]):\n    wigner(name, ax)\n",
            wigners
        ));
    }
    for series in ["excitation_master.csv", "excitation_qsd.csv", "trajectory.csv", "poincare.csv"] {
        if bundle.get(series).is_none() {
            continue;
        }
        let plot = if series == "poincare.csv" {
            "plt.figure()\nd = load(\"poincare.csv\")\nplt.plot(d[\"re\"], d[\"im\"], \".\", ms=2)\nplt.title(\"poincare.csv\")\n".to_owned()
        } else {
            let y = if series == "excitation_qsd.csv" { "n_mean" } else { "n" };
            format!("plt.figure()\nd = load(\"{series}\")\nplt.plot(d[\"t\"], d[\"{y}\"], lw=0.7)\nplt.title(\"{series}\")\n")
        };
        s.push_str(&plot);
    }
    s.push_str("plt.show()\n");
    s
}
