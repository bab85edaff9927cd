"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantity next to its tolerance and the wall time next to its limit. Run
``python3 tests/test_acceptance.py`` (or ``pytest tests/test_acceptance.py -s``)
to see only these lines.
"""

import sys
import time

import numpy as np
import pytest

from tldakit import formats
from tldakit.cli import main as cli_main
from tldakit.data import generate_synthetic
from tldakit.discriminant import (ScatterPair, build_scatters, fit_lda, ratio_trace_gep,
                                  trace_ratio, trace_ratio_newton)
from tldakit.evaluation import cmc_curve, nearest_neighbor
from tldakit.mda import alternating_mda, k_mode_scatters
from tldakit.pipeline import MethodConfig, repeated_holdout
from tldakit.tensor import bcirc, bdiag, mat_th
from tldakit.tlda import LabeledTensorDataset, project, train_ratio_trace, train_trace_ratio
from tldakit.transforms import (build_dct, build_dft, forward, hermitian_transpose, inverse,
                                l_identity, l_product)

from oracles import dft_matrix, materialized_mode_scatters, max_angle, psd_pair, rng, tproduct_fft


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, elapsed, limit):
        line = (f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  "
                f"[{elapsed:.2f} s, limit {limit} s]")
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def _block_identity_residual(Q, op, A, Ah):
    n1, n2, _ = A.shape
    lhs = bdiag(Ah)
    rhs = np.kron(Q, np.eye(n1)) @ op(A) @ np.kron(np.linalg.inv(Q), np.eye(n2))
    return float(np.abs(lhs - rhs).max())


def test_criterion_1_block_diagonalization(report):
    t0 = time.perf_counter()
    g = rng(101)
    worst_t = worst_c = worst_c_dct = 0.0
    for _ in range(50):
        shape = (int(g.integers(1, 5)), int(g.integers(1, 4)), int(g.integers(1, 6)))
        A = g.standard_normal(shape)
        n3 = shape[2]
        Lt, Lc = build_dft(n3), build_dct(n3)
        # t-product with the independently built DFT matrix
        worst_t = max(worst_t, _block_identity_residual(dft_matrix(n3), bcirc, A, forward(A, Lt)))
        # c-product exactly as written: the transform matrix M conjugates matTH
        worst_c = max(worst_c, _block_identity_residual(Lc.M, mat_th, A, forward(A, Lc)))
        # the orthonormal DCT-II is the matrix that block-diagonalizes matTH
        worst_c_dct = max(worst_c_dct, _block_identity_residual(Lc.diagonalizer, mat_th, A, forward(A, Lc)))
    elapsed = time.perf_counter() - t0
    ok = worst_t < 1e-10 and worst_c < 1e-10 and elapsed < 5
    report(1, ok, f"max residual t-product(M=F)={worst_t:.2e}, c-product(M=W^-1C(I+Z))={worst_c:.2e} "
                  f"(tol 1e-10); c-product with the DCT-II in place of M: {worst_c_dct:.2e}",
           elapsed, 5)


def test_criterion_1_dct_diagonalizer_holds():
    # companion check, not a criterion line: the identity holds with C as conjugator
    g = rng(102)
    for _ in range(50):
        A = g.standard_normal((int(g.integers(1, 5)), int(g.integers(1, 4)), int(g.integers(1, 6))))
        L = build_dct(A.shape[2])
        assert _block_identity_residual(L.diagonalizer, mat_th, A, forward(A, L)) < 1e-10


def test_criterion_2_product_algebra(report):
    t0 = time.perf_counter()
    g = rng(202)
    worst = 0.0
    for case in range(100):
        n3 = int(g.integers(1, 6))
        L = (build_dft if case % 2 == 0 else build_dct)(n3)
        m, l, p, q = (int(v) for v in g.integers(1, 5, size=4))
        a, a2 = g.standard_normal((m, l, n3)), g.standard_normal((m, l, n3))
        b, b2 = g.standard_normal((l, p, n3)), g.standard_normal((l, p, n3))
        c = g.standard_normal((p, q, n3))
        errs = [
            np.abs(l_product(a, l_identity(l, L), L) - a).max(),
            np.abs(l_product(l_identity(m, L), a, L) - a).max(),
            np.abs(l_product(l_product(a, b, L), c, L) - l_product(a, l_product(b, c, L), L)).max(),
            np.abs(l_product(a, b + b2, L) - l_product(a, b, L) - l_product(a, b2, L)).max(),
            np.abs(l_product(a + a2, b, L) - l_product(a, b, L) - l_product(a2, b, L)).max(),
            np.abs(hermitian_transpose(l_product(a, b, L), L)
                   - l_product(hermitian_transpose(b, L), hermitian_transpose(a, L), L)).max(),
            np.abs(inverse(forward(a, L), L) - a).max(),
        ]
        if L.name == "t":
            errs.append(np.abs(l_product(a, b, L) - tproduct_fft(a, b)).max())
        worst = max(worst, max(errs))
    elapsed = time.perf_counter() - t0
    report(2, worst < 1e-9 and elapsed < 10,
           f"max error over identity/assoc/distrib/transpose/round-trip = {worst:.2e} (tol 1e-9, 100 cases)",
           elapsed, 10)


def test_criterion_3_degeneration(report):
    t0 = time.perf_counter()
    g = rng(303)
    rho_err = angle = 0.0
    decisions_equal = True
    L = build_dft(1)
    for trial in range(20):
        c, n1 = int(g.integers(2, 5)), int(g.integers(4, 9))
        b = generate_synthetic(c, int(g.integers(6, 12)), n1, 1, separation=2.0, seed=1000 + trial)
        ds = LabeledTensorDataset(b.data, b.labels)
        X = b.data[:, :, 0]
        k = int(g.integers(1, c))
        tr = train_trace_ratio(ds, k, L)
        ref = fit_lda(X, b.labels, k=k, weight_between=False)
        rho_err = max(rho_err, abs(tr.rho[0] - ref.rho))
        angle = max(angle, max_angle(tr.V[:, :, 0], ref.V))
        gamma = 0.1
        rt = train_ratio_trace(ds, gamma, L)
        ref_rt = ratio_trace_gep(build_scatters(X, b.labels, weight_between=False), gamma, "auto")
        angle = max(angle, max_angle(rt.V[:, :, 0], ref_rt.vectors))
        for model, W in ((tr, ref.V), (rt, ref_rt.vectors)):
            mine, _ = nearest_neighbor(project(model, b.data), b.labels, project(model, b.data))
            theirs, _ = nearest_neighbor((W.T @ X)[:, :, None], b.labels, (W.T @ X)[:, :, None])
            decisions_equal &= bool(np.array_equal(mine, theirs))
    elapsed = time.perf_counter() - t0
    ok = rho_err < 1e-8 and angle < 1e-8 and decisions_equal and elapsed < 10
    report(3, ok, f"|rho diff|={rho_err:.2e}, max principal angle={angle:.2e} (tol 1e-8), "
                  f"identical decisions={decisions_equal} (20 datasets)", elapsed, 10)


def test_criterion_4_newton_contract(report):
    t0 = time.perf_counter()
    g = rng(404)
    worst_drop = 0.0
    dominance = np.inf
    for _ in range(50):
        d = int(g.integers(2, 41))
        k = int(g.integers(1, d + 1))
        Sb, Sw = psd_pair(g, d, rank_b=int(g.integers(1, d + 1)), complex_=bool(g.integers(0, 2)))
        s = ScatterPair(Sb, Sw)
        state = trace_ratio_newton(s, k)
        worst_drop = max(worst_drop, float(-np.min(np.diff(state.history), initial=0.0)))
        Q, _ = np.linalg.qr(ratio_trace_gep(s, 0.0, k).vectors)
        dominance = min(dominance, state.rho - trace_ratio(Sb, Sw, Q))
    closed = abs(trace_ratio_newton(ScatterPair(np.diag([4.0, 2.0, 1.0]), np.eye(3)), 2).rho - 3.0)
    elapsed = time.perf_counter() - t0
    ok = worst_drop <= 1e-8 and dominance >= -1e-8 and closed < 1e-10 and elapsed < 10
    report(4, ok, f"largest rho decrease={worst_drop:.1e} (slack 1e-8), min(rho* - rho_ratio_trace)={dominance:.2e} (>= -1e-8), "
                  f"diag(4,2,1) k=2 error={closed:.1e} (tol 1e-10)", elapsed, 10)


def _full_solve_residual(ds, K, L):
    """Solve every transform-domain slice on its own and invert with numpy's FFT."""
    Xh = np.fft.fft(ds.X, axis=2)
    n1, _, n3 = ds.X.shape
    Vh = np.zeros((n1, K, n3), dtype=complex)
    for i in range(n3):
        Vh[:, :, i] = trace_ratio_newton(build_scatters(Xh[:, :, i], ds.labels, False), K).V
    return np.fft.ifft(Vh, axis=2)


def test_criterion_5_real_output(report):
    t0 = time.perf_counter()
    g = rng(505)
    worst_oracle = worst_gap = 0.0
    all_real = True
    for trial in range(20):
        n3 = (2, 3, 4, 5)[trial % 4]
        b = generate_synthetic(int(g.integers(2, 5)), 8, int(g.integers(4, 9)), n3, seed=2000 + trial)
        ds = LabeledTensorDataset(b.data, b.labels)
        L = build_dft(n3)
        model = train_trace_ratio(ds, 2, L)
        rt = train_ratio_trace(ds, 0.1, L)
        all_real &= not np.iscomplexobj(model.V) and not np.iscomplexobj(rt.V)
        V_oracle = _full_solve_residual(ds, 2, L)
        worst_oracle = max(worst_oracle, float(np.abs(V_oracle.imag).max()))
        worst_gap = max(worst_gap, float(np.abs(V_oracle.real - model.V).max()))
    elapsed = time.perf_counter() - t0
    ok = all_real and worst_oracle < 1e-8 and worst_gap < 1e-8 and elapsed < 10
    report(5, ok, f"stored V real={all_real}; imaginary residual of unmirrored solve={worst_oracle:.2e}, "
                  f"gap to model={worst_gap:.2e} (tol 1e-8, 20 datasets)", elapsed, 10)


def test_criterion_6_end_to_end(report):
    t0 = time.perf_counter()
    b = generate_synthetic(4, 50, 16, 4, separation=5.0, noise=1.0, seed=0)
    ds = LabeledTensorDataset(b.data, b.labels)
    acc = {}
    for method, transform, extra in (("tlda-tr", "t", {"k": 3}), ("tlda-tr", "c", {"k": 3}),
                                     ("tlda-rt", "t", {"gamma": 1e-3}), ("tlda-rt", "c", {"gamma": 1e-3})):
        cfg = MethodConfig(method, transform, **extra)
        acc[(method, transform)] = repeated_holdout(cfg, ds, 30, 0.3, seed=0).row()["acc_mean"]
    elapsed = time.perf_counter() - t0
    ok = (acc[("tlda-tr", "t")] >= 95 and acc[("tlda-tr", "c")] >= 95
          and acc[("tlda-tr", "t")] >= acc[("tlda-rt", "t")]
          and acc[("tlda-tr", "c")] >= acc[("tlda-rt", "c")] and elapsed < 60)
    detail = ", ".join(f"{m}/{t}={a:.2f}%" for (m, t), a in acc.items())
    report(6, ok, f"mean accuracy over 30 splits: {detail} (need tr >= 95% and tr >= rt)", elapsed, 60)


def test_criterion_7_mda_baseline(report):
    t0 = time.perf_counter()
    g = rng(707)
    worst_drop = 0.0
    for _ in range(20):
        dims = tuple(int(v) for v in g.integers(2, 5, size=3))
        c = int(g.integers(2, 4))
        n = 6 * c
        samples = g.standard_normal((n,) + dims)
        labels = np.arange(n) % c
        samples += 0.8 * labels[:, None, None, None]
        targets = tuple(int(g.integers(1, d + 1)) for d in dims)
        trace = alternating_mda(samples, labels, targets).objective_trace
        worst_drop = max(worst_drop, float(-np.min(np.diff(trace), initial=0.0)))
    worst_scatter = 0.0
    for _ in range(10):
        samples = g.standard_normal((10, 3, 4, 2))
        labels = np.arange(10) % 2
        factors = [np.linalg.qr(g.standard_normal((d, m)))[0] for d, m in ((3, 2), (4, 2), (2, 1))]
        for mode in (1, 2, 3):
            s = k_mode_scatters(samples, labels, factors, mode)
            Sb, Sw = materialized_mode_scatters(samples, labels, factors, mode)
            worst_scatter = max(worst_scatter, np.abs(s.Sb - Sb).max(), np.abs(s.Sw - Sw).max())
    elapsed = time.perf_counter() - t0
    ok = worst_drop <= 1e-8 and worst_scatter < 1e-9 and elapsed < 20
    report(7, ok, f"largest objective decrease={worst_drop:.2e} (slack 1e-8, 20 datasets), "
                  f"k-mode scatter vs Kronecker formula={worst_scatter:.2e} (tol 1e-9)", elapsed, 20)


def test_criterion_8_cmc(report):
    t0 = time.perf_counter()
    ranked = [[7, 8, 9, 10, 11], [8, 7, 9, 10, 11], [8, 9, 10, 11, 7]]
    cmc = cmc_curve(ranked, [7, 7, 7])
    exact = list(cmc) == [1 / 3, 2 / 3, 2 / 3, 2 / 3, 1.0]
    g = rng(808)
    ok_random = True
    for _ in range(200):
        c = int(g.integers(2, 10))
        lists = [list(g.permutation(c)) for _ in range(int(g.integers(1, 30)))]
        truth = [int(g.integers(0, c)) for _ in lists]
        curve = cmc_curve(lists, truth)
        ok_random &= bool(np.all(np.diff(curve) >= 0) and curve[-1] == 1.0)
    elapsed = time.perf_counter() - t0
    report(8, exact and ok_random and elapsed < 1,
           f"hand case {np.round(cmc, 6).tolist()} exact={exact}; random lists monotone and end at 1.0={ok_random}",
           elapsed, 1)


def _cli_outputs(workdir):
    workdir.mkdir()
    data, other = workdir / "d.tns3", workdir / "b.tns3"
    cmds = [
        ["gen", "--classes", 3, "--per-class", 8, "--n1", 6, "--n3", 3, "--seed", 42, "--out", data],
        ["gen", "--classes", 2, "--per-class", 2, "--n1", 24, "--n3", 3, "--seed", 7, "--out", other],
        ["train", "--data", data, "--transform", "t", "--k", 2, "--out", workdir / "m.tlda"],
        ["train", "--data", data, "--method", "tlda-rt", "--transform", "c", "--gamma", 0.1,
         "--out", workdir / "rt.tlda"],
        ["cv", "--data", data, "--transform", "c", "--grid", "1,2,3", "--folds", 3, "--seed", 42,
         "--out", workdir / "cv.csv"],
        ["cmc", "--model", workdir / "m.tlda", "--gallery", data, "--probes", data,
         "--out", workdir / "cmc.csv"],
        ["product", "--a", data, "--b", other, "--transform", "c", "--out", workdir / "p.tns3"],
    ]
    for argv in cmds:
        assert cli_main([str(a) for a in argv]) == 0
    return {p.name: p.read_bytes() for p in sorted(workdir.iterdir())}


def test_criterion_9_io_bit_exactness(report, tmp_path, capsys):
    t0 = time.perf_counter()
    g = rng(909)
    tns3_ok = True
    for complex_ in (False, True):
        t = g.standard_normal((4, 3, 5))
        if complex_:
            t = t + 1j * g.standard_normal((4, 3, 5))
        raw = formats.tns3_bytes(t)
        formats.save_tns3(tmp_path / "t.tns3", t)
        back = formats.load_tns3(tmp_path / "t.tns3")
        tns3_ok &= (tmp_path / "t.tns3").read_bytes() == raw and formats.tns3_bytes(back) == raw
    b = generate_synthetic(3, 6, 5, 3, seed=9)
    ds = LabeledTensorDataset(b.data, b.labels)
    model_ok = True
    for model in (train_trace_ratio(ds, 2, build_dft(3)), train_ratio_trace(ds, 0.5, build_dct(3))):
        raw = formats.model_bytes(model)
        formats.save_model(tmp_path / "m.tlda", model)
        model_ok &= formats.model_bytes(formats.load_model(tmp_path / "m.tlda")) == raw
    run_a = _cli_outputs(tmp_path / "run_a")
    run_b = _cli_outputs(tmp_path / "run_b")
    capsys.readouterr()
    cli_ok = run_a == run_b
    elapsed = time.perf_counter() - t0
    report(9, tns3_ok and model_ok and cli_ok and elapsed < 5,
           f"TNS3 round trip identical={tns3_ok}, model round trip identical={model_ok}, "
           f"two CLI runs identical over {len(run_a)} files={cli_ok}", elapsed, 5)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
