"""einc: a compiler for lifted tensor-field expressions over sampled images."""

__version__ = "0.1.0"
