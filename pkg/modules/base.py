"""Base interface for estimation methods."""
from abc import ABC, abstractmethod

from config.settings import Settings
from core.types import FitResult, ItemParams, MixingWeights, ModelKind, ResponseMatrix
from utils.random import RandomSource
from .em import cem_fixed, em_random


class BaseMethod(ABC):
    """
    Abstract base class for estimation methods.

    A method turns a response matrix and a class count into a ``FitResult``
    for either model kind: marginal EM for the random-effect model, CEM
    for the fixed-effect model.
    """

    name: str = "base"

    def __init__(self, model: ModelKind = "random", settings: Settings | None = None):
        """
        Initialize method with model kind and configuration.

        Args:
            model: "random" (mixing weights) or "fixed" (class assignments)
            settings: Application settings; defaults when omitted
        """
        self.model = model
        self.settings = settings or Settings()

    @abstractmethod
    def fit(self, R: ResponseMatrix, n_classes: int, rng: RandomSource = None) -> FitResult:
        """
        Estimate an L-class model.

        Args:
            R: Validated responses
            n_classes: Number of latent classes L
            rng: Seed or generator for any randomness the method needs

        Returns:
            Fit for ``self.model``
        """

    def refine(self, R: ResponseMatrix, p: MixingWeights | None, theta: ItemParams) -> FitResult:
        """Run EM (random) or CEM (fixed) from the given starting values."""
        if p is None:
            p = MixingWeights.uniform(theta.n_classes)
        runner = em_random if self.model == "random" else cem_fixed
        return runner(R, p, theta, self.settings.em)
