class PrepError(ValueError):
    """Unusable input: missing files, size mismatches, impossible options."""
