"""
整段信号的嵌入与提取
分帧 → 清浊音判别 → 按 ZE 选帧 → 逐帧嵌入 → 拼帧，并负责密钥文件的序列化与解析
"""

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from audio_io import Frame, SpeechSignal, assemble_frames, split_frames
from embedder import EmbedParams, FrameStegoRecord, embed_bit, extract_bit, frame_s_max
from errors import (IneligibleFrame, InsufficientVoicedFrames, InvalidMessage, InvalidParams,
                    KeyOutOfRange, MalformedKey, NoVoicedFrames, SignalTooShort, UnsupportedVersion)
from gbt import GraphSpec
from voicing import VoicingLabel, classify_features, compute_features, rank_features

logger = logging.getLogger(__name__)

KEY_MAGIC = "STEGKEY"
KEY_VERSION = "v1"

PathLike = Union[str, Path]


# ========== 消息 ==========

@dataclass(frozen=True)
class Message:
    """待隐藏的比特序列"""
    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise InvalidMessage("消息不能为空")
        if any(b not in (0, 1) for b in bits):
            raise InvalidMessage("消息只能包含 0/1")
        object.__setattr__(self, 'bits', bits)

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_bitstring(cls, text: str) -> "Message":
        """由 "0101..." 字符串构造，忽略首尾空白"""
        text = text.strip()
        if not text:
            raise InvalidMessage("比特串为空")
        if set(text) - {'0', '1'}:
            raise InvalidMessage(f"比特串含有非 0/1 字符: {text[:20]!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Message":
        """字节按高位在前展开为比特"""
        if not data:
            raise InvalidMessage("消息文件为空")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def random(cls, n_bits: int, seed) -> "Message":
        """给定种子的随机消息"""
        if n_bits < 1:
            raise InvalidMessage(f"消息长度至少为 1: {n_bits}")
        rng = np.random.default_rng(seed)
        return cls(tuple(int(b) for b in rng.integers(0, 2, n_bits)))

    def to_bitstring(self) -> str:
        return ''.join(str(b) for b in self.bits)

    def to_bytes(self) -> bytes:
        """高位在前打包，最后一个字节不足 8 位时补 0"""
        return np.packbits(np.array(self.bits, dtype=np.uint8)).tobytes()


# ========== 密钥 ==========

@dataclass
class StegoKey:
    """提取密钥：结构参数加按比特顺序排列的帧记录"""
    params: EmbedParams
    records: List[FrameStegoRecord]
    version: str = KEY_VERSION

    def validate(self) -> None:
        if not self.records:
            raise MalformedKey("密钥中没有帧记录")
        indices = [r.frame_index for r in self.records]
        if len(set(indices)) != len(indices):
            raise MalformedKey("帧序号重复")
        for r in self.records:
            if r.frame_index < 0:
                raise MalformedKey(f"帧序号不能为负: {r.frame_index}")
            if not (math.isfinite(r.s_max) and r.s_max > self.params.alpha):
                raise MalformedKey(f"第 {r.frame_index} 帧 s_max={r.s_max} 不大于 α")


@dataclass
class CapacityReport:
    """载体容量"""
    total_frames: int
    voiced_frames: int
    eligible_frames: int


def _analyze(cover: SpeechSignal, params: EmbedParams):
    frames, remainder = split_frames(cover, params.frame_len)
    features = compute_features(frames)
    labels = classify_features(features)
    voiced = sum(1 for label in labels if label is VoicingLabel.VOICED)
    try:
        ranked = rank_features([f.index for f in frames], features, labels)
    except NoVoicedFrames:
        ranked = []
    return frames, remainder, ranked, voiced


def capacity(cover: SpeechSignal, params: Optional[EmbedParams] = None) -> CapacityReport:
    """统计总帧数、浊音帧数和可嵌入帧数"""
    params = (params or EmbedParams()).validate()
    basis = params.basis()
    frames, _, ranked, voiced = _analyze(cover, params)
    eligible = sum(1 for i in ranked if frame_s_max(frames[i], params, basis) > params.alpha)
    return CapacityReport(len(frames), voiced, eligible)


def embed(cover: SpeechSignal, message: Message,
          params: Optional[EmbedParams] = None) -> Tuple[SpeechSignal, StegoKey]:
    """
    把消息嵌入载体的浊音帧

    第 i 个比特放入按 ZE 升序的第 i 个可嵌入浊音帧，不可嵌入的帧跳过

    Args:
        cover: 载体信号
        message: 消息
        params: 嵌入参数，缺省为实验默认值

    Returns:
        (含密信号, 密钥)

    Raises:
        InsufficientVoicedFrames: 可嵌入浊音帧少于消息比特数
    """
    params = (params or EmbedParams()).validate()
    basis = params.basis()
    frames, remainder, ranked, voiced = _analyze(cover, params)
    logger.debug(f"检测到 {voiced} 个浊音帧，共 {len(frames)} 帧")

    n_bits = len(message)
    stego_frames: List[Frame] = list(frames)
    records: List[FrameStegoRecord] = []
    skipped = 0
    for index in ranked:
        if len(records) == n_bits:
            break
        try:
            stego_frame, record = embed_bit(frames[index], message.bits[len(records)], params, basis)
        except IneligibleFrame:
            skipped += 1
            continue
        stego_frames[index] = stego_frame
        records.append(record)

    if skipped:
        logger.warning(f"跳过 {skipped} 个最大奇异值不大于 α 的浊音帧")
    if len(records) < n_bits:
        raise InsufficientVoicedFrames(len(records), n_bits)

    stego = assemble_frames(stego_frames, remainder, cover.sample_rate_hz)
    return stego, StegoKey(params, records)


def extract(stego: SpeechSignal, key: StegoKey) -> Message:
    """
    按密钥逐帧提取比特

    Raises:
        KeyOutOfRange: 密钥中的帧序号超出信号
        MalformedKey: 密钥本身不合法
    """
    key.validate()
    try:
        params = key.params.validate()
    except InvalidParams as e:
        raise MalformedKey(f"密钥参数不合法: {e}") from e
    basis = params.basis()

    try:
        frames, _ = split_frames(stego, params.frame_len)
    except SignalTooShort as e:
        raise KeyOutOfRange(f"信号不足一帧: {e}") from e

    bits = []
    for record in key.records:
        if record.frame_index >= len(frames):
            raise KeyOutOfRange(f"帧序号 {record.frame_index} 超出信号帧数 {len(frames)}")
        bits.append(extract_bit(frames[record.frame_index], record, params, basis))
    return Message(tuple(bits))


# ========== 密钥文件 ==========

_HEADER_FIELDS = ('frame_len', 'dwt_levels', 'alpha', 'graph_n', 'w1', 'w2', 'matrix_dim', 'n_bits')
_INT_FIELDS = {'frame_len', 'dwt_levels', 'graph_n', 'matrix_dim', 'n_bits'}


def serialize_key(key: StegoKey) -> bytes:
    """
    序列化为 UTF-8 文本，LF 换行

    浮点数用 repr 输出最短的可精确往返的十进制表示
    """
    key.validate()
    p = key.params
    lines = [
        f"{KEY_MAGIC} {key.version}",
        f"frame_len={p.frame_len}",
        f"dwt_levels={p.dwt_levels}",
        f"alpha={float(p.alpha)!r}",
        f"graph_n={p.graph.n}",
        f"w1={float(p.graph.w1)!r}",
        f"w2={float(p.graph.w2)!r}",
        f"matrix_dim={p.matrix_dim}",
        f"n_bits={len(key.records)}",
    ]
    lines.extend(f"{r.frame_index} {float(r.s_max)!r}" for r in key.records)
    return ('\n'.join(lines) + '\n').encode('utf-8')


def _parse_number(name: str, text: str):
    try:
        if name in _INT_FIELDS:
            return int(text)
        value = float(text)
    except ValueError as e:
        raise MalformedKey(f"{name} 不是合法数值: {text!r}") from e
    if not math.isfinite(value):
        raise MalformedKey(f"{name} 必须是有限数: {text!r}")
    return value


def parse_key(data: bytes) -> StegoKey:
    """
    解析密钥文件，格式严格，多余的行也视为错误

    Raises:
        MalformedKey: 格式错误或被截断
        UnsupportedVersion: 版本号不是 v1
    """
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        raise MalformedKey(f"密钥不是 UTF-8 文本: {e}") from e

    lines = text.split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise MalformedKey("密钥为空")

    m = re.fullmatch(rf"{KEY_MAGIC} (v\d+)", lines[0])
    if m is None:
        raise MalformedKey(f"密钥头不合法: {lines[0][:40]!r}")
    if m.group(1) != KEY_VERSION:
        raise UnsupportedVersion(f"不支持的密钥版本: {m.group(1)}")

    if len(lines) < 1 + len(_HEADER_FIELDS):
        raise MalformedKey("密钥头被截断")

    header = {}
    for name, line in zip(_HEADER_FIELDS, lines[1:1 + len(_HEADER_FIELDS)]):
        prefix = f"{name}="
        if not line.startswith(prefix):
            raise MalformedKey(f"期望 {name}=...，实际为 {line[:40]!r}")
        header[name] = _parse_number(name, line[len(prefix):])

    n_bits = header['n_bits']
    if n_bits < 1:
        raise MalformedKey(f"n_bits 至少为 1: {n_bits}")
    body = lines[1 + len(_HEADER_FIELDS):]
    if len(body) < n_bits:
        raise MalformedKey(f"帧记录被截断: 期望 {n_bits} 行，实际 {len(body)} 行")
    if len(body) > n_bits:
        raise MalformedKey(f"帧记录之后有 {len(body) - n_bits} 行多余内容")

    records = []
    for line in body:
        parts = line.split(' ')
        if len(parts) != 2:
            raise MalformedKey(f"帧记录格式错误: {line[:40]!r}")
        try:
            index = int(parts[0])
            s_max = float(parts[1])
        except ValueError as e:
            raise MalformedKey(f"帧记录格式错误: {line[:40]!r}") from e
        records.append(FrameStegoRecord(index, s_max))

    try:
        graph = GraphSpec(header['graph_n'], header['w1'], header['w2'])
        params = EmbedParams(header['alpha'], header['frame_len'], header['dwt_levels'],
                             graph, header['matrix_dim']).validate()
    except InvalidParams as e:
        raise MalformedKey(f"密钥参数不合法: {e}") from e

    key = StegoKey(params, records, m.group(1))
    key.validate()
    return key


def save_key(key: StegoKey, path: PathLike) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_key(key))


def load_key(path: PathLike) -> StegoKey:
    return parse_key(Path(path).read_bytes())

