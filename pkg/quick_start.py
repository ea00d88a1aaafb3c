#!/usr/bin/env python3
"""
快速启动脚本
修改下面的配置，然后运行：python quick_start.py

流程：生成（或读取）语料 → 嵌入随机消息 → 攻击 → 提取 → 输出评测报告
"""

import asyncio
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from attacks import MP3_CMD_ENV, default_attack_suite
from audio_io import read_wav, synth_voiced_corpus
from benchmark import BenchConfig, BenchmarkRunner, recommend_alpha, write_reports
from embedder import EmbedParams
from errors import EmptyCorpus, StegoError
from gbt import GraphSpec

# 加载环境变量（STEGO_MP3_CMD、STEGO_JOBS）
load_dotenv()

# 设置为INFO级别，避免过多调试信息
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')


async def main():
    # ========== 配置区域 ==========

    # 1. 嵌入参数
    params = EmbedParams(
        alpha=0.05,                               # 🎚️ 嵌入强度（越大越鲁棒，越小越不可感知）
        frame_len=80,                             # 📏 帧长，8 kHz 下 10 ms
        dwt_levels=2,                             # 🌊 小波层数，0 为不做小波的基线
        graph=GraphSpec(n=20, w1=1.0, w2=0.3),    # 🕸️ 路径图
        matrix_dim=4,                             # 🔢 SVD 方阵边长
    )

    # 2. 语料 - corpus_dir 为 None 时使用合成语料
    corpus_dir = None                             # 📁 例如 "data/noizeus"
    synth_count = 30                              # 🎙️ 合成语料条数
    synth_duration = 2.0                          # ⏱️ 每条时长（秒）

    # 3. 评测配置
    config = BenchConfig(
        message_bits=50,                          # 📝 每条信号的随机消息长度
        seed=7,                                   # 🎲 随机种子（相同种子结果完全一致）
        batch_size=10,                            # 📦 每批信号数
        attack_suite=default_attack_suite(include_mp3=bool(os.getenv(MP3_CMD_ENV))),
        alpha_sweep=(0.01, 0.05, 0.1, 0.2, 0.35),
    )

    # 4. 输出
    report_path = "reports/quick_start"           # 📄 生成 .txt / .csv / _sweep.csv / _detail.csv

    # ========== 配置区域结束 ==========

    print("🚀 开始语音隐写评测...")
    if corpus_dir:
        wav_files = sorted(Path(corpus_dir).glob("*.wav"))
        if not wav_files:
            raise EmptyCorpus(f"目录中没有 WAV 文件: {corpus_dir}")
        corpus = [read_wav(p) for p in wav_files]
        names = [p.stem for p in wav_files]
        print(f"📁 语料目录: {corpus_dir}（{len(corpus)} 条）")
    else:
        corpus = synth_voiced_corpus(synth_count, synth_duration, config.seed)
        names = [f"synth_{i:03d}" for i in range(len(corpus))]
        print(f"🎙️ 合成语料: {synth_count} 条 × {synth_duration} 秒")

    runner = BenchmarkRunner(params, config)
    report = await runner.run(corpus, names)
    paths = write_reports(report, report_path)

    print("\n" + "=" * 50)
    print("📊 评测完成")
    print(f"📈 平均 PSNR: {report.mean_psnr:.2f} dB，平均 SNR: {report.mean_snr:.2f} dB")
    for row in report.attack_rows:
        value = "skipped" if row.mean_ber is None else f"{row.mean_ber:.4f}"
        print(f"   {row.spec.label:<18} BER {value}")
    best = recommend_alpha(report)
    print(f"💡 推荐 α: {best:g}" if best is not None else "💡 没有 α 满足 BER <= 0.1")
    print(f"📁 文本报告: {paths['text']}")
    print(f"📁 CSV 报告: {paths['csv']}")


if __name__ == "__main__":
    try:
        asyncio.run(main())
    except StegoError as e:
        print(f"❌ 处理失败: {e}")
        sys.exit(1)
