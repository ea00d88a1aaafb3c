#!/usr/bin/env python3
"""
语音隐写命令行工具

子命令：
    embed     把消息嵌入载体 WAV，输出含密 WAV 与密钥文件
    extract   用密钥从含密 WAV 中提取消息
    attack    对 WAV 施加一种攻击
    evaluate  计算两个 WAV 之间的 PSNR/SNR
    bench     在语料上跑完整评测，输出文本与 CSV 报告
    synth     生成合成语料

示例：
    python stego_cli.py synth --count 3 --out-dir corpus
    python stego_cli.py embed --cover corpus/synth_000.wav --bits 0110... --out stego.wav --key stego.key
    python stego_cli.py extract --stego stego.wav --key stego.key --out message.txt
    python stego_cli.py bench --synth 30 --alpha 0.05 --seed 7 --report reports/bench
"""

import argparse
import asyncio
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from attacks import MP3_CMD_ENV, AttackKind, AttackSpec, apply_attack, default_attack_suite
from audio_io import read_wav, split_frames, synth_voiced_corpus, wav_header, write_wav
from benchmark import (DEFAULT_ALPHA_SWEEP, BenchConfig, BenchmarkRunner, attach_external_scores,
                       recommend_alpha, write_reports)
from embedder import EmbedParams
from errors import EmptyCorpus, InvalidMessage, InvalidParams, StegoError
from gbt import GraphSpec
from metrics import ber, psnr, snr
from pipeline import Message, capacity, embed, extract, load_key, save_key
from voicing import frame_features

logger = logging.getLogger(__name__)


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.05, help="嵌入强度 α")
    parser.add_argument("--frame-len", type=int, default=80, help="帧长（样本数）")
    parser.add_argument("--dwt-levels", type=int, default=2, help="小波层数，0 表示不做小波")
    parser.add_argument("--graph-n", type=int, default=20, help="路径图节点数")
    parser.add_argument("--w1", type=float, default=1.0, help="一阶近邻边权")
    parser.add_argument("--w2", type=float, default=0.3, help="二阶近邻边权")
    parser.add_argument("--matrix-dim", type=int, default=4, help="SVD 方阵边长")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="DWT-GBT-SVD 语音隐写工具")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="输出调试日志")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="只输出警告和错误")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="嵌入消息")
    p.add_argument("--cover", required=True, help="载体 WAV")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--bits", help="0/1 比特串")
    source.add_argument("--message-file", help="消息文件，按字节高位在前展开")
    p.add_argument("--out", required=True, help="含密 WAV 输出路径")
    p.add_argument("--key", required=True, help="密钥文件输出路径")
    p.add_argument("--features", help="逐帧 ZCC/STE/ZE 特征表 CSV 输出路径")
    _add_param_flags(p)

    p = sub.add_parser("extract", help="提取消息")
    p.add_argument("--stego", required=True, help="含密 WAV")
    p.add_argument("--key", required=True, help="密钥文件")
    p.add_argument("--out", required=True, help="提取出的比特串输出路径")
    p.add_argument("--expected", help="原始比特串，给出时打印 BER")

    p = sub.add_parser("attack", help="施加攻击")
    p.add_argument("--input", required=True, help="输入 WAV")
    p.add_argument("--output", required=True, help="输出 WAV")
    p.add_argument("--kind", required=True, choices=[k.value for k in AttackKind if k is not AttackKind.NONE])
    p.add_argument("--parameter", type=float, required=True,
                   help="SNR(dB)/中间采样率(Hz)/位深/截止频率(Hz)/倍数/码率(kbps)")
    p.add_argument("--seed", type=int, default=0, help="加噪随机种子")
    p.add_argument("--mp3-cmd", help=f"MP3 命令模板，缺省读取 {MP3_CMD_ENV}")

    p = sub.add_parser("evaluate", help="计算 PSNR/SNR")
    p.add_argument("--reference", required=True, help="参考 WAV")
    p.add_argument("--test", required=True, help="待测 WAV")

    p = sub.add_parser("bench", help="语料评测")
    corpus = p.add_mutually_exclusive_group(required=True)
    corpus.add_argument("--corpus-dir", help="WAV 语料目录")
    corpus.add_argument("--synth", type=int, help="改用 N 条合成语料")
    p.add_argument("--duration", type=float, default=2.0, help="合成语料每条时长（秒）")
    p.add_argument("--sweep", default=",".join(f"{a:g}" for a in DEFAULT_ALPHA_SWEEP),
                   help="α 扫描取值，逗号分隔")
    p.add_argument("--seed", type=int, default=0, help="随机种子")
    p.add_argument("--message-bits", type=int, default=50, help="每条信号的随机消息长度")
    p.add_argument("--jobs", type=int, default=None, help="并发线程数，缺省读取 STEGO_JOBS 或 CPU 核数")
    p.add_argument("--report", required=True, help="报告路径前缀")
    p.add_argument("--mp3", action="store_true", help="加入 MP3 攻击（需要配置外部编解码器）")
    p.add_argument("--mp3-bitrate", type=int, default=128, help="MP3 码率（kbps）")
    p.add_argument("--external-scores", help="第三方 PESQ/STOI 结果 CSV")
    _add_param_flags(p)

    p = sub.add_parser("synth", help="生成合成语料")
    p.add_argument("--count", type=int, default=30, help="条数")
    p.add_argument("--duration", type=float, default=2.0, help="每条时长（秒）")
    p.add_argument("--seed", type=int, default=0, help="随机种子")
    p.add_argument("--out-dir", required=True, help="输出目录")

    return parser


def _params_from_args(parser: argparse.ArgumentParser, args) -> EmbedParams:
    params = EmbedParams(args.alpha, args.frame_len, args.dwt_levels,
                         GraphSpec(args.graph_n, args.w1, args.w2), args.matrix_dim)
    try:
        return params.validate()
    except InvalidParams as e:
        parser.error(str(e))


def cmd_embed(parser, args) -> int:
    params = _params_from_args(parser, args)
    try:
        if args.bits is not None:
            message = Message.from_bitstring(args.bits)
        else:
            message = Message.from_bytes(Path(args.message_file).read_bytes())
    except InvalidMessage as e:
        parser.error(str(e))

    cover = read_wav(args.cover)
    report = capacity(cover, params)
    logger.info(f"共 {report.total_frames} 帧，浊音帧 {report.voiced_frames}，可嵌入 {report.eligible_frames}")

    stego, key = embed(cover, message, params)
    write_wav(stego, args.out)
    save_key(key, args.key)
    if args.features:
        frames, _ = split_frames(cover, params.frame_len)
        frame_features(frames).to_csv(args.features, index=False, encoding="utf-8", lineterminator="\n")

    print(f"📝 嵌入比特数: {len(message)}")
    print(f"🎙️ 浊音帧数: {report.voiced_frames}（可嵌入 {report.eligible_frames}）")
    print(f"📈 PSNR: {psnr(cover, stego):.2f} dB")
    print(f"📁 含密音频: {args.out}")
    print(f"🔑 密钥文件: {args.key}")
    if args.features:
        print(f"📁 帧特征表: {args.features}")
    return 0


def cmd_extract(parser, args) -> int:
    expected = None
    if args.expected is not None:
        try:
            expected = Message.from_bitstring(args.expected)
        except InvalidMessage as e:
            parser.error(str(e))

    key = load_key(args.key)
    stego = read_wav(args.stego)
    message = extract(stego, key)

    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(message.to_bitstring() + "\n", encoding="utf-8")

    print(f"📝 提取比特数: {len(message)}")
    print(f"📁 输出文件: {args.out}")
    if expected is not None:
        print(f"BER {ber(expected, message):.3f}")
    return 0


def _check_attack_parameter(parser, kind: AttackKind, parameter: float, input_path: str) -> None:
    """在读取样本前按攻击类型检查 --parameter，非法时以退出码 2 结束"""
    if not math.isfinite(parameter):
        parser.error(f"--parameter 必须是有限数: {parameter}")
    if kind is AttackKind.RESAMPLE and (parameter != int(parameter) or parameter <= 0):
        parser.error(f"重采样率必须是正整数 Hz: {parameter:g}")
    if kind is AttackKind.REQUANTIZE and (parameter != int(parameter) or not 4 <= parameter <= 16):
        parser.error(f"位深必须是 4-16 的整数: {parameter:g}")
    if kind is AttackKind.SCALE and parameter <= 0:
        parser.error(f"缩放倍数必须为正: {parameter:g}")
    if kind is AttackKind.MP3 and (parameter != int(parameter) or parameter <= 0):
        parser.error(f"MP3 码率必须是正整数 kbps: {parameter:g}")
    if kind in (AttackKind.LOWPASS, AttackKind.HIGHPASS):
        nyquist = wav_header(input_path).samplerate / 2
        if kind is AttackKind.LOWPASS and not 0 < parameter <= nyquist:
            parser.error(f"低通截止频率须在 (0, {nyquist:g}] Hz: {parameter:g}")
        if kind is AttackKind.HIGHPASS and not 0 < parameter < nyquist:
            parser.error(f"高通截止频率须在 (0, {nyquist:g}) Hz: {parameter:g}")


def cmd_attack(parser, args) -> int:
    kind = AttackKind(args.kind)
    _check_attack_parameter(parser, kind, args.parameter, args.input)
    spec = AttackSpec(kind, args.parameter, args.seed)
    signal = read_wav(args.input)
    attacked = apply_attack(signal, spec, args.mp3_cmd)
    write_wav(attacked, args.output)
    print(f"✅ {spec.label} 已写出: {args.output}")
    return 0


def cmd_evaluate(parser, args) -> int:
    reference = read_wav(args.reference)
    test = read_wav(args.test)
    print(f"PSNR {psnr(reference, test):.2f} dB")
    print(f"SNR {snr(reference, test):.2f} dB")
    return 0


def _parse_sweep(parser, text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        parser.error(f"--sweep 格式错误: {text}")
    if not values or any(not v > 0 for v in values):
        parser.error(f"--sweep 需要正数列表: {text}")
    return values


def cmd_bench(parser, args) -> int:
    params = _params_from_args(parser, args)
    sweep = _parse_sweep(parser, args.sweep)
    if args.synth is not None and args.synth < 1:
        parser.error("--synth 至少为 1")
    if args.message_bits < 1:
        parser.error("--message-bits 至少为 1")
    if args.jobs is not None and args.jobs < 1:
        parser.error("--jobs 至少为 1")
    if not args.duration > 0:
        parser.error("--duration 必须为正")

    if args.synth is not None:
        corpus = synth_voiced_corpus(args.synth, args.duration, args.seed)
        names = [f"synth_{i:03d}" for i in range(len(corpus))]
    else:
        wav_files = sorted(Path(args.corpus_dir).glob("*.wav"))
        if not wav_files:
            raise EmptyCorpus(f"目录中没有 WAV 文件: {args.corpus_dir}")
        corpus = [read_wav(p) for p in wav_files]
        names = [p.stem for p in wav_files]

    include_mp3 = args.mp3 or bool(os.getenv(MP3_CMD_ENV))
    config = BenchConfig(
        message_bits=args.message_bits,
        seed=args.seed,
        attack_suite=default_attack_suite(include_mp3, args.mp3_bitrate),
        alpha_sweep=tuple(sweep),
    )
    if args.jobs is not None:
        config.jobs = args.jobs

    print(f"🚀 开始评测 {len(corpus)} 条信号，α={params.alpha}，种子 {args.seed}")
    runner = BenchmarkRunner(params, config)
    report = asyncio.run(runner.run(corpus, names))
    if args.external_scores:
        attach_external_scores(report, args.external_scores)
    paths = write_reports(report, args.report)

    print(f"📈 平均 PSNR: {report.mean_psnr:.2f} dB")
    for row in report.attack_rows:
        value = "skipped" if row.mean_ber is None else f"{row.mean_ber:.4f}"
        print(f"   {row.spec.label:<18} BER {value}")
    best = recommend_alpha(report)
    if best is not None:
        print(f"💡 推荐 α: {best:g}")
    for name, path in paths.items():
        print(f"📁 {name}: {path}")
    return 0


def cmd_synth(parser, args) -> int:
    if args.count < 1:
        parser.error("--count 至少为 1")
    if not args.duration > 0:
        parser.error("--duration 必须为正")
    out_dir = Path(args.out_dir)
    corpus = synth_voiced_corpus(args.count, args.duration, args.seed)
    for i, signal in enumerate(corpus):
        write_wav(signal, out_dir / f"synth_{i:03d}.wav")
    print(f"✅ 已生成 {len(corpus)} 条合成语料: {out_dir}")
    return 0


COMMANDS = {
    "embed": cmd_embed,
    "extract": cmd_extract,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')
    logging.getLogger().setLevel(level)

    try:
        return COMMANDS[args.command](parser, args)
    except (StegoError, OSError) as e:
        logger.error(f"{args.command} 失败: {e}")
        print(f"❌ 处理失败: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
