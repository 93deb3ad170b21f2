"""minitag: multilingual sequence-labeling models, distillation, accounting.

Kept import-light on purpose: the CLI pins BLAS threading before numpy
loads, so nothing heavy may be imported here.
"""

__version__ = "0.1.0"
