"""
评测模块
在语料上批量执行 嵌入 → 攻击 → 提取，汇总 PSNR/SNR/BER，扫描 α，并导出文本与 CSV 报告
"""

import asyncio
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from attacks import AttackKind, AttackSpec, apply_attack, default_attack_suite, scale
from audio_io import SpeechSignal
from embedder import EmbedParams
from errors import EmptyCorpus, ExternalScoresError, StegoError
from metrics import ber, psnr, snr
from pipeline import Message, embed, extract

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_SWEEP = (0.01, 0.05, 0.1, 0.2, 0.35)
SWEEP_SCALE_FACTOR = 0.7

# 参考 BER，仅在文本报告中对照显示
REFERENCE_BER = {
    AttackKind.AWGN: 0.0,
    AttackKind.MP3: 0.210,
    AttackKind.RESAMPLE: 0.0,
    AttackKind.LOWPASS: 0.0,
    AttackKind.HIGHPASS: 0.0,
    AttackKind.SCALE: 0.518,
    AttackKind.REQUANTIZE: 0.0,
}
REFERENCE_PSNR_DB = 52.29

PathLike = Union[str, Path]


def _default_jobs() -> int:
    env = os.getenv("STEGO_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning(f"STEGO_JOBS 不是整数，忽略: {env}")
    return os.cpu_count() or 1


@dataclass
class BenchConfig:
    """评测配置"""
    message_bits: int = 50  # 每条信号嵌入的随机消息长度
    seed: int = 0  # 消息与加噪的随机种子
    jobs: int = field(default_factory=_default_jobs)  # 并发线程数
    batch_size: int = 10  # 每批信号数，用于进度日志
    attack_suite: List[AttackSpec] = field(default_factory=default_attack_suite)
    alpha_sweep: Sequence[float] = DEFAULT_ALPHA_SWEEP
    mp3_command: Optional[str] = None  # MP3 命令模板，None 时读取 STEGO_MP3_CMD


@dataclass
class AttackRow:
    spec: AttackSpec
    mean_ber: Optional[float]  # None 表示整行跳过
    n_signals: int
    note: str = ""


@dataclass
class SweepRow:
    alpha: float
    mean_psnr: float
    mean_ber: float  # 缩放 0.7 攻击下
    n_signals: int  # 该 α 下成功嵌入的信号数


@dataclass
class DetailRow:
    signal: str
    attack: str
    parameter: float
    ber: Optional[float]


@dataclass
class BenchReport:
    """评测结果"""
    params: EmbedParams
    seed: int
    n_signals: int
    mean_psnr: float
    mean_snr: float
    attack_rows: List[AttackRow]
    sweep_rows: List[SweepRow]
    detail_rows: List[DetailRow] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    external_scores: Optional[Dict[str, float]] = None
    sample_rate_hz: int = 8000

    def row(self, kind: AttackKind) -> Optional[AttackRow]:
        for r in self.attack_rows:
            if r.spec.kind is kind:
                return r
        return None


@dataclass
class _SignalResult:
    """单条信号的评测结果"""
    name: str
    psnr: Optional[float] = None
    snr: Optional[float] = None
    attack_bers: Dict[int, Optional[float]] = field(default_factory=dict)  # 攻击序号 -> BER，None 为跳过
    attack_errors: Dict[int, str] = field(default_factory=dict)
    sweep: Dict[int, Tuple[float, float]] = field(default_factory=dict)  # α 序号 -> (PSNR, BER)
    sweep_errors: Dict[int, str] = field(default_factory=dict)
    error: Optional[str] = None


class BenchmarkRunner:
    """语料级批量评测，线程池执行，按信号序号汇总"""

    def __init__(self, params: EmbedParams, config: BenchConfig):
        self.params = params.validate()
        self.config = config
        self.semaphore: Optional[asyncio.Semaphore] = None
        self._sample_rate_hz = 8000

    def _signal_seed(self, index: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.config.seed, index])

    def evaluate_signal(self, index: int, name: str, cover: SpeechSignal) -> _SignalResult:
        """单条信号：嵌入随机消息，逐个攻击后提取，再做 α 扫描"""
        result = _SignalResult(name)
        seed_seq = self._signal_seed(index)
        message_seed, noise_seed = seed_seq.spawn(2)
        message = Message.random(self.config.message_bits, message_seed)

        try:
            stego, key = embed(cover, message, self.params)
        except StegoError as e:
            result.error = str(e)
            return result
        result.psnr = psnr(cover, stego)
        result.snr = snr(cover, stego)

        awgn_seed = int(noise_seed.generate_state(1)[0])
        for i, spec in enumerate(self.config.attack_suite):
            if spec.kind is AttackKind.AWGN:
                spec = replace(spec, seed=awgn_seed)
            try:
                attacked = apply_attack(stego, spec, self.config.mp3_command)
                result.attack_bers[i] = ber(message, extract(attacked, key))
            except StegoError as e:
                result.attack_bers[i] = None
                result.attack_errors[i] = str(e)

        for j, alpha in enumerate(self.config.alpha_sweep):
            sweep_params = replace(self.params, alpha=float(alpha))
            try:
                sweep_stego, sweep_key = embed(cover, message, sweep_params)
                attacked = scale(sweep_stego, SWEEP_SCALE_FACTOR)
                result.sweep[j] = (psnr(cover, sweep_stego), ber(message, extract(attacked, sweep_key)))
            except StegoError as e:
                result.sweep_errors[j] = str(e)
                logger.warning(f"{name} 在 α={alpha} 下嵌入失败: {e}")

        return result

    async def _evaluate_async(self, executor: ThreadPoolExecutor, index: int, name: str,
                              cover: SpeechSignal) -> _SignalResult:
        async with self.semaphore:
            loop = asyncio.get_running_loop()
            return await loop.run_in_executor(executor, self.evaluate_signal, index, name, cover)

    async def run(self, corpus: Sequence[SpeechSignal], names: Optional[Sequence[str]] = None) -> BenchReport:
        """
        批量评测整个语料

        Args:
            corpus: 载体信号列表
            names: 信号名称，缺省为 signal_000, signal_001, ...

        Returns:
            BenchReport
        """
        if not corpus:
            raise EmptyCorpus("语料为空")
        self._sample_rate_hz = corpus[0].sample_rate_hz
        # 信号量须在运行中的事件循环里创建
        self.semaphore = asyncio.Semaphore(max(1, self.config.jobs))
        if names is None:
            names = [f"signal_{i:03d}" for i in range(len(corpus))]

        results: List[_SignalResult] = []
        batch_size = max(1, self.config.batch_size)
        n_batches = (len(corpus) + batch_size - 1) // batch_size
        start_time = time.time()

        with ThreadPoolExecutor(max_workers=max(1, self.config.jobs)) as executor:
            for b, start in enumerate(range(0, len(corpus), batch_size)):
                end = min(start + batch_size, len(corpus))
                logger.info(f"处理批次 {b + 1}/{n_batches}，包含 {end - start} 条信号")
                tasks = [self._evaluate_async(executor, i, names[i], corpus[i]) for i in range(start, end)]
                batch_results = await asyncio.gather(*tasks, return_exceptions=True)

                for i, res in zip(range(start, end), batch_results):
                    if isinstance(res, Exception):
                        logger.error(f"{names[i]} 评测异常: {res}")
                        res = _SignalResult(names[i], error=str(res))
                    results.append(res)

                elapsed = time.time() - start_time
                avg = elapsed / end
                logger.info(f"已处理 {end}/{len(corpus)}，平均耗时 {avg:.2f}s/条，"
                            f"预计剩余时间 {avg * (len(corpus) - end):.1f}s")

        return self._aggregate(results)

    def _aggregate(self, results: List[_SignalResult]) -> BenchReport:
        """按信号序号顺序求均值，保证浮点结果与调度顺序无关"""
        notes = [f"{r.name}: {r.error}" for r in results if r.error]
        ok = [r for r in results if r.error is None]
        for r in results:
            if r.error:
                logger.warning(f"{r.name} 未参与统计: {r.error}")

        attack_rows = []
        detail_rows = []
        for i, spec in enumerate(self.config.attack_suite):
            values = []
            for r in ok:
                value = r.attack_bers.get(i)
                detail_rows.append(DetailRow(r.name, spec.kind.value, spec.parameter, value))
                if value is not None:
                    values.append(value)
            note = ""
            if not values:
                errors = [r.attack_errors[i] for r in ok if i in r.attack_errors]
                note = f"skipped: {errors[0]}" if errors else "skipped"
            elif len(values) < len(ok):
                note = f"{len(ok) - len(values)} 条信号攻击失败"
            attack_rows.append(AttackRow(spec, _mean(values) if values else None, len(values), note))

        sweep_rows = []
        for j, alpha in enumerate(self.config.alpha_sweep):
            pairs = [r.sweep[j] for r in ok if j in r.sweep]
            if pairs:
                sweep_rows.append(SweepRow(float(alpha), _mean([p for p, _ in pairs]),
                                           _mean([b for _, b in pairs]), len(pairs)))
        for r in ok:
            for j, err in sorted(r.sweep_errors.items()):
                notes.append(f"{r.name}: α={self.config.alpha_sweep[j]:g} 未参与扫描: {err}")

        return BenchReport(
            params=self.params,
            seed=self.config.seed,
            n_signals=len(ok),
            mean_psnr=_mean([r.psnr for r in ok]) if ok else math.nan,
            mean_snr=_mean([r.snr for r in ok]) if ok else math.nan,
            attack_rows=attack_rows,
            sweep_rows=sweep_rows,
            detail_rows=detail_rows,
            notes=notes,
            sample_rate_hz=self._sample_rate_hz,
        )


def _mean(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def run_benchmark(corpus: Sequence[SpeechSignal], params: EmbedParams,
                  attack_suite: Optional[Sequence[AttackSpec]] = None,
                  alpha_sweep: Sequence[float] = DEFAULT_ALPHA_SWEEP, seed: int = 0,
                  config: Optional[BenchConfig] = None,
                  names: Optional[Sequence[str]] = None) -> BenchReport:
    """
    同步入口：在语料上跑完整评测

    Args:
        corpus: 载体信号
        params: 嵌入参数
        attack_suite: 攻击列表，缺省为默认攻击组合（不含 MP3）
        alpha_sweep: 扫描的 α 取值
        seed: 随机种子
        config: 其余评测配置（并发数、消息长度等），其中的 attack_suite/alpha_sweep/seed 会被上面的参数覆盖

    Returns:
        BenchReport
    """
    config = replace(config or BenchConfig(),
                     attack_suite=list(attack_suite) if attack_suite is not None else default_attack_suite(),
                     alpha_sweep=tuple(alpha_sweep), seed=seed)
    runner = BenchmarkRunner(params, config)
    return asyncio.run(runner.run(corpus, names))


def recommend_alpha(report: BenchReport, max_ber: float = 0.1) -> Optional[float]:
    """缩放攻击 BER 不超过 max_ber 的 α 中，选平均 PSNR 最高的一个"""
    candidates = [r for r in report.sweep_rows if r.mean_ber <= max_ber]
    if not candidates:
        return None
    best = max(candidates, key=lambda r: (r.mean_psnr, -r.alpha))
    return best.alpha


def attach_external_scores(report: BenchReport, csv_path: PathLike) -> BenchReport:
    """
    读入第三方工具算出的 PESQ/STOI（每条信号一行，列名 pesq、stoi），记录均值
    """
    df = pd.read_csv(csv_path)
    missing = {'pesq', 'stoi'} - set(df.columns)
    if missing:
        raise ExternalScoresError(f"外部评分文件缺少列: {sorted(missing)}")
    df = df[['pesq', 'stoi']].dropna()
    if df.empty:
        raise ExternalScoresError("外部评分文件没有有效数据")
    report.external_scores = {'pesq': float(df['pesq'].mean()), 'stoi': float(df['stoi'].mean())}
    logger.info(f"已读入 {len(df)} 条外部评分")
    return report


# ========== 报告 ==========

def _fmt_ber(value: Optional[float]) -> str:
    return "skipped" if value is None else f"{value:.4f}"


def _fmt_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.2f}"


def attack_table(report: BenchReport) -> pd.DataFrame:
    """机器可读的攻击汇总表"""
    return pd.DataFrame({
        'attack': [r.spec.kind.value for r in report.attack_rows],
        'parameter': [r.spec.parameter for r in report.attack_rows],
        'mean_ber': ["skipped" if r.mean_ber is None else r.mean_ber for r in report.attack_rows],
        'n_signals': [r.n_signals for r in report.attack_rows],
    })


def sweep_table(report: BenchReport) -> pd.DataFrame:
    return pd.DataFrame({
        'alpha': [r.alpha for r in report.sweep_rows],
        'mean_psnr': [r.mean_psnr for r in report.sweep_rows],
        'mean_ber': [r.mean_ber for r in report.sweep_rows],
        'n_signals': [r.n_signals for r in report.sweep_rows],
    })


def detail_table(report: BenchReport) -> pd.DataFrame:
    return pd.DataFrame({
        'signal': [r.signal for r in report.detail_rows],
        'attack': [r.attack for r in report.detail_rows],
        'parameter': [r.parameter for r in report.detail_rows],
        'ber': [r.ber for r in report.detail_rows],
    })


def format_text_report(report: BenchReport) -> str:
    """对齐的文本报告"""
    p = report.params
    lines = [
        "# 隐写评测报告",
        "",
        f"- 信号数: {report.n_signals}",
        f"- 参数: α={p.alpha}, frame_len={p.frame_len}, dwt_levels={p.dwt_levels}, "
        f"graph=({p.graph.n}, {p.graph.w1}, {p.graph.w2}), matrix_dim={p.matrix_dim}",
        f"- 随机种子: {report.seed}",
        "- PSNR 峰值取 1.0（归一化满幅）",
        "",
        "## 不可感知性",
        f"- 平均 PSNR: {_fmt_db(report.mean_psnr)} dB（参考值 {REFERENCE_PSNR_DB} dB）",
        f"- 平均 SNR: {_fmt_db(report.mean_snr)} dB",
    ]
    if report.external_scores:
        lines.append(f"- PESQ: {report.external_scores['pesq']:.3f}")
        lines.append(f"- STOI: {report.external_scores['stoi']:.4f}")
    else:
        lines.append("- PESQ: external")
        lines.append("- STOI: external")

    lines += ["", "## 鲁棒性", ""]
    header = f"{'attack':<18}{'mean_ber':>10}{'reference':>11}{'n':>5}  notes"
    lines.append(header)
    lines.append("-" * len(header))
    for r in report.attack_rows:
        ref = REFERENCE_BER.get(r.spec.kind)
        ref_text = "-" if ref is None else f"{ref:.3f}"
        note = r.note
        if r.spec.kind is AttackKind.LOWPASS and not note and r.spec.parameter * 2 >= report.sample_rate_hz:
            note = "截止频率等于 Nyquist，近似直通"
        lines.append(f"{r.spec.label:<18}{_fmt_ber(r.mean_ber):>10}{ref_text:>11}{r.n_signals:>5}  {note}".rstrip())

    lines += ["", "## α 扫描（缩放 0.7）", ""]
    header = f"{'alpha':>8}{'mean_psnr':>12}{'mean_ber':>10}{'n':>5}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in report.sweep_rows:
        lines.append(f"{r.alpha:>8g}{_fmt_db(r.mean_psnr):>12}{r.mean_ber:>10.4f}{r.n_signals:>5}")

    best = recommend_alpha(report)
    lines.append("")
    if best is None:
        lines.append("trade-off: 没有 α 满足 BER <= 0.1")
    else:
        lines.append(f"trade-off: 推荐 α = {best:g}（BER <= 0.1 且 PSNR 最高）")

    if report.notes:
        lines += ["", "## 备注"]
        lines.extend(f"- {note}" for note in report.notes)
    return "\n".join(lines) + "\n"


def write_reports(report: BenchReport, report_path: PathLike) -> Dict[str, Path]:
    """
    写出文本报告与 CSV

    report_path 去掉后缀作为前缀，生成 <stem>.txt、<stem>.csv、<stem>_sweep.csv、<stem>_detail.csv

    Returns:
        各文件路径
    """
    base = Path(report_path)
    base = base.with_suffix('') if base.suffix else base
    base.parent.mkdir(parents=True, exist_ok=True)

    paths = {
        'text': base.parent / f"{base.name}.txt",
        'csv': base.parent / f"{base.name}.csv",
        'sweep': base.parent / f"{base.name}_sweep.csv",
        'detail': base.parent / f"{base.name}_detail.csv",
    }
    try:
        with open(paths['text'], 'w', encoding='utf-8', newline='\n') as f:
            f.write(format_text_report(report))
        attack_table(report).to_csv(paths['csv'], index=False, encoding='utf-8', lineterminator='\n')
        sweep_table(report).to_csv(paths['sweep'], index=False, encoding='utf-8', lineterminator='\n')
        detail_table(report).to_csv(paths['detail'], index=False, encoding='utf-8', lineterminator='\n')
    except OSError as e:
        logger.error(f"写出报告失败: {e}")
        raise

    logger.info(f"评测报告已导出到: {paths['text']}")
    return paths
