import os


class Settings():
    # Application
    app_name: str = os.getenv("APP_NAME", "MAUNet Toolkit")
    debug_env = os.getenv("DEBUG", "false").lower()
    debug: bool = False if debug_env == "false" else True
    log_level: str = os.getenv("LOG_LEVEL", "INFO")
    log_dir: str = os.getenv(
        "LOG_DIR",
        os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "logs"),
    )
    log_timezone: str = os.getenv("LOG_TIMEZONE", "Asia/Kolkata")

    # Execution
    threads: int = int(os.getenv("MAUNET_THREADS", 1))
    out_dir: str = os.getenv("MAUNET_OUT_DIR", "runs")

    # Defaults shared by evaluation and baselines
    kl_bins: int = int(os.getenv("MAUNET_KL_BINS", 50))
    kl_epsilon: float = float(os.getenv("MAUNET_KL_EPSILON", 1e-10))
    n_quantiles: int = int(os.getenv("MAUNET_N_QUANTILES", 100))

    def resolve_threads(self, override: int = None) -> int:
        """
        Number of worker threads for per-cell work.

        Args:
            override: Value given on the command line, if any

        Returns:
            A positive thread count
        """
        threads = override if override is not None else self.threads
        return max(1, int(threads))


settings = Settings()
