"""
30 条合成语料上的端到端验收：往返、不可感知性、攻击鲁棒性、α 趋势、变换不变量与可复现性
"""

import numpy as np
import pytest

from attacks import AttackKind
from audio_io import Frame
from benchmark import BenchConfig, run_benchmark, write_reports
from dwt import dwt_multi, idwt_multi
from embedder import EmbedParams, embed_bit, extract_bit, is_eligible
from gbt import GraphSpec, build_adjacency, gbt_basis, gbt_forward, gbt_inverse, laplacian
from linalg import svd_small, symmetric_evd
from metrics import ber, psnr
from pipeline import Message, embed, extract

BENCH_SEED = 7


@pytest.fixture(scope="module")
def bench_report(corpus):
    return run_benchmark(corpus, EmbedParams(alpha=0.05), seed=BENCH_SEED, config=BenchConfig(jobs=4))


def test_round_trip_hundred_messages(corpus):
    params = EmbedParams(alpha=0.05)
    for k in range(100):
        cover = corpus[k % len(corpus)]
        message = Message.random(50, [BENCH_SEED, k])
        stego, key = embed(cover, message, params)
        assert ber(message, extract(stego, key)) == 0.0


def test_mean_psnr(corpus):
    values = []
    for i, cover in enumerate(corpus):
        stego, _ = embed(cover, Message.random(50, i), EmbedParams(alpha=0.05))
        values.append(psnr(cover, stego))
    assert np.mean(values) >= 40


def test_robustness_rows(bench_report):
    rows = {r.spec.kind: r.mean_ber for r in bench_report.attack_rows}
    assert rows[AttackKind.NONE] == 0.0
    assert rows[AttackKind.AWGN] <= 0.02
    assert rows[AttackKind.RESAMPLE] <= 0.02
    assert rows[AttackKind.REQUANTIZE] == 0.0
    assert rows[AttackKind.HIGHPASS] <= 0.05
    assert rows[AttackKind.LOWPASS] == 0.0


def test_scaling_signature(bench_report):
    assert 0.35 <= bench_report.row(AttackKind.SCALE).mean_ber <= 0.65


def test_alpha_trend(bench_report):
    sweep = bench_report.sweep_rows
    assert [r.alpha for r in sweep] == [0.01, 0.05, 0.1, 0.2, 0.35]
    for lower, higher in zip(sweep, sweep[1:]):
        assert higher.mean_ber <= lower.mean_ber
        assert higher.mean_psnr <= lower.mean_psnr
    assert sweep[-1].mean_ber < sweep[1].mean_ber


def test_transform_invariants():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        x = rng.normal(size=80)
        assert np.max(np.abs(idwt_multi(dwt_multi(x, 2)) - x)) <= 1e-10

    spec = GraphSpec()
    basis = gbt_basis(spec)
    v = basis.v
    assert np.max(np.abs(v.T @ v - np.eye(spec.n))) <= 1e-9
    for _ in range(100):
        s = rng.normal(size=spec.n)
        assert np.max(np.abs(gbt_inverse(basis, gbt_forward(basis, s)) - s)) <= 1e-10

    lap = laplacian(build_adjacency(spec))
    np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
    eigenvalues = basis.eigenvalues
    assert abs(eigenvalues[0]) <= 1e-9
    assert np.count_nonzero(np.abs(eigenvalues) <= 1e-9) == 1

    for _ in range(100):
        m = rng.normal(size=(4, 4))
        assert np.max(np.abs(svd_small(m).reconstruct() - m)) <= 1e-8

    p3 = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    np.testing.assert_allclose(symmetric_evd(p3).eigenvalues, [0.0, 1.0, 3.0], atol=1e-9)


def test_per_frame_distortion():
    rng = np.random.default_rng(99)
    params = EmbedParams(alpha=0.05)
    basis = params.basis()
    checked = 0
    while checked < 1000:
        frame = Frame(checked, rng.normal(0, 0.3, 80))
        if not is_eligible(frame, params, basis):
            continue
        bit = checked % 2
        stego, record = embed_bit(frame, bit, params, basis)
        assert np.linalg.norm(stego.samples - frame.samples) == pytest.approx(params.alpha, rel=1e-6)
        assert extract_bit(stego, record, params, basis) == bit
        checked += 1


def test_bench_reports_reproducible(tmp_path, corpus, bench_report):
    again = run_benchmark(corpus, EmbedParams(alpha=0.05), seed=BENCH_SEED, config=BenchConfig(jobs=1))
    first = write_reports(bench_report, tmp_path / "first" / "bench")
    second = write_reports(again, tmp_path / "second" / "bench")
    for name in ('csv', 'sweep', 'detail', 'text'):
        assert first[name].read_bytes() == second[name].read_bytes()
