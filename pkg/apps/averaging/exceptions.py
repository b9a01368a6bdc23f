class AveragingError(Exception):
    pass


class DissipativityError(AveragingError):
    """The fast coefficients fail beta > 2L, so no mixing is guaranteed."""

    def __init__(self, beta_hat, L_hat):
        self.beta_hat = beta_hat
        self.L_hat = L_hat
        super().__init__(
            f"dissipativity check failed: beta_hat={beta_hat:.4g} <= 2*L_hat={2 * L_hat:.4g}; "
            "pass override=True to estimate anyway"
        )


class MixingRateError(AveragingError):
    def __init__(self, alpha_hat):
        self.alpha_hat = alpha_hat
        super().__init__(f"no positive mixing rate available (alpha_hat={alpha_hat:.4g})")


class NotPositiveSemidefiniteError(AveragingError):
    def __init__(self, min_eigenvalue, tol):
        self.min_eigenvalue = min_eigenvalue
        self.tol = tol
        super().__init__(f"matrix has eigenvalue {min_eigenvalue:.3e} below -{tol:.0e}")


class AsymmetricMatrixError(AveragingError):
    pass
