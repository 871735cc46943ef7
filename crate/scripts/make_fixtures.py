#!/usr/bin/env python3
"""Train the small SVM fixtures used by the Rust test suites.

Uses the 8x8 digits set bundled with scikit-learn, so no download is
needed. Pixel values are scaled from [0, 16] to [0, 1]. Writes, under
crates/core/tests/fixtures/:

  digits_rbf.model       10-class RBF model, first 1000 samples
  digits_poly3.model     10-class cubic model, first 500 samples
  digits_linear01.model  binary linear model, digit 1 vs digit 7
  digits_test.csv        100 held-out samples (label, 64 features)
  digits_test01.csv      held-out samples of digits 1 and 7
  *.expected.json        scikit-learn predictions and ovo decision values
"""

import json
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits
from sklearn.svm import SVC

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "fixtures"
N_TRAIN = 1000
TEST = slice(1000, 1100)


def fmt(v):
    return repr(float(v))


def write_model(clf, path):
    """libsvm text format, from the raw libsvm arrays kept by scikit-learn."""
    kernel = clf.kernel
    m = len(clf.classes_)
    lines = ["svm_type c_svc", f"kernel_type {'polynomial' if kernel == 'poly' else kernel}"]
    if kernel == "poly":
        lines.append(f"degree {clf.degree}")
    if kernel in ("poly", "rbf"):
        lines.append(f"gamma {fmt(clf._gamma)}")
    if kernel == "poly":
        lines.append(f"coef0 {fmt(clf.coef0)}")
    lines += [
        f"nr_class {m}",
        f"total_sv {clf.support_vectors_.shape[0]}",
        "rho " + " ".join(fmt(-b) for b in clf._intercept_),
        "label " + " ".join(str(int(c)) for c in clf.classes_),
        "nr_sv " + " ".join(str(int(k)) for k in clf.n_support_),
        "SV",
    ]
    coef = clf._dual_coef_
    for s, sv in enumerate(clf.support_vectors_):
        head = " ".join(fmt(coef[r, s]) for r in range(m - 1))
        feats = " ".join(f"{j + 1}:{fmt(v)}" for j, v in enumerate(sv) if v != 0.0)
        lines.append(f"{head} {feats}".rstrip())
    path.write_text("\n".join(lines) + "\n")


def write_csv(x, y, path):
    rows = [",".join([str(int(lbl))] + [fmt(v) for v in row]) for row, lbl in zip(x, y)]
    path.write_text("\n".join(rows) + "\n")


def expected(clf, x, path, meta):
    out = dict(meta)
    out["predictions"] = [int(p) for p in clf.predict(x)]
    if len(clf.classes_) > 2:
        out["decision_values"] = clf.decision_function(x).tolist()
    else:
        # scikit-learn negates the binary decision value relative to libsvm
        out["decision_values"] = [[-v] for v in clf.decision_function(x).tolist()]
    path.write_text(json.dumps(out, indent=1) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    x = digits.data / 16.0
    y = digits.target
    xtr, ytr = x[:N_TRAIN], y[:N_TRAIN]
    xte, yte = x[TEST], y[TEST]
    write_csv(xte, yte, OUT / "digits_test.csv")

    rbf = SVC(kernel="rbf", C=10.0, gamma=0.05, decision_function_shape="ovo").fit(xtr, ytr)
    write_model(rbf, OUT / "digits_rbf.model")
    expected(rbf, xte, OUT / "digits_rbf.expected.json",
             {"kernel": "rbf", "gamma": 0.05, "C": 10.0, "train": N_TRAIN,
              "accuracy": float(rbf.score(xte, yte))})

    poly = SVC(kernel="poly", degree=3, gamma=0.1, coef0=1.0, C=1.0,
               decision_function_shape="ovo").fit(x[:500], y[:500])
    write_model(poly, OUT / "digits_poly3.model")
    expected(poly, xte, OUT / "digits_poly3.expected.json",
             {"kernel": "poly", "degree": 3, "gamma": 0.1, "coef0": 1.0, "C": 1.0, "train": 500,
              "accuracy": float(poly.score(xte, yte))})

    pick = np.isin(y, [1, 7])
    idx = np.flatnonzero(pick)
    tr = idx[idx < N_TRAIN]
    te = idx[idx >= N_TRAIN][:40]
    lin = SVC(kernel="linear", C=1.0).fit(x[tr], y[tr])
    write_model(lin, OUT / "digits_linear01.model")
    write_csv(x[te], y[te], OUT / "digits_test01.csv")
    expected(lin, x[te], OUT / "digits_linear01.expected.json",
             {"kernel": "linear", "C": 1.0, "train": int(len(tr)), "classes": [1, 7],
              "accuracy": float(lin.score(x[te], y[te]))})


if __name__ == "__main__":
    main()
