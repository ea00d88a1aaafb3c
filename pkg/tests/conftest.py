import sys
from pathlib import Path

import numpy as np
import pytest

# 平铺布局没有可安装的包，把仓库根目录放进导入路径
ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from audio_io import SpeechSignal, synth_voiced_corpus  # noqa: E402
from embedder import EmbedParams  # noqa: E402

CORPUS_SEED = 7


@pytest.fixture(scope="session")
def corpus():
    """30 条 2 秒合成语料"""
    return synth_voiced_corpus(30, 2.0, seed=CORPUS_SEED)


@pytest.fixture(scope="session")
def small_corpus(corpus):
    return corpus[:3]


@pytest.fixture
def params():
    return EmbedParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sine(freq_hz: float, amplitude: float = 0.5, n: int = 16000, sr: int = 8000,
         phase: float = 0.0) -> SpeechSignal:
    t = np.arange(n) / sr
    return SpeechSignal(amplitude * np.sin(2 * np.pi * freq_hz * t + phase), sr)
