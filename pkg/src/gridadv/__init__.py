"""Adversarial input perturbations against small power-system ML models.

Two desk-scale tasks: power-quality waveform classification (MLP) and
building load forecasting (RNN), plus one-step black-box attacks crafted on
a self-trained surrogate and transferred to an unseen victim.
"""

__version__ = "0.1.0"
