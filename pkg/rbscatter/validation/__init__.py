"""Independent cross-checks of the integral-operator solver."""
