"""
异常定义模块
所有模块共用的错误类型，入口脚本统一捕获 StegoError
"""


class StegoError(Exception):
    """隐写工具包的基础异常"""


# ---------- 音频读写 ----------

class NotWav(StegoError, ValueError):
    """文件不是 RIFF/WAVE 格式"""


class UnsupportedFormat(StegoError, ValueError):
    """压缩/浮点/扩展格式等不支持的 WAV"""


class SignalTooShort(StegoError, ValueError):
    """信号不足一帧"""


class MissingFrame(StegoError, ValueError):
    """帧序号不连续"""


# ---------- 通用长度/参数 ----------

class LengthTooSmall(StegoError, ValueError):
    pass


class LengthMismatch(StegoError, ValueError):
    pass


class InvalidParams(StegoError, ValueError):
    """嵌入参数不满足结构约束"""


class InvalidMessage(StegoError, ValueError):
    """消息为空或包含非 0/1 字符"""


# ---------- 浊音检测 ----------

class TooFewFrames(StegoError, ValueError):
    pass


class NoVoicedFrames(StegoError, ValueError):
    pass


# ---------- 线性代数 ----------

class NotSymmetric(StegoError, ValueError):
    pass


class NotSquare(StegoError, ValueError):
    pass


class NoConvergence(StegoError, ArithmeticError):
    pass


# ---------- 小波 ----------

class OddLength(StegoError, ValueError):
    pass


class IndivisibleLength(StegoError, ValueError):
    pass


# ---------- 嵌入/提取 ----------

class IneligibleFrame(StegoError, ValueError):
    """最大奇异值不大于 α 的帧不能承载比特"""


class InsufficientVoicedFrames(StegoError, ValueError):
    """可用浊音帧少于消息比特数"""

    def __init__(self, available: int, required: int):
        self.available = available
        self.required = required
        super().__init__(f"insufficient voiced frames (have {available}, need {required})")


class KeyOutOfRange(StegoError, ValueError):
    pass


class MalformedKey(StegoError, ValueError):
    pass


class UnsupportedVersion(StegoError, ValueError):
    pass


# ---------- 攻击 ----------

class SilentSignal(StegoError, ValueError):
    pass


class BadRate(StegoError, ValueError):
    pass


class BadBits(StegoError, ValueError):
    pass


class BadCutoff(StegoError, ValueError):
    pass


class BadFactor(StegoError, ValueError):
    pass


class EncoderUnavailable(StegoError, RuntimeError):
    """未配置或找不到外部 MP3 编解码器"""


class EncoderFailed(StegoError, RuntimeError):
    pass


# ---------- 评测 ----------

class EmptyCorpus(StegoError, ValueError):
    pass


class ExternalScoresError(StegoError, ValueError):
    """外部 PESQ/STOI 结果文件缺列或为空"""
