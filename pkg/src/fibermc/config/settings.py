import os

from dotenv import load_dotenv

# override=False so real environment variables always win over .env values.
load_dotenv(override=False)


class Settings:
    @property
    def LOG_LEVEL(self) -> str:
        return os.getenv("FIBERMC_LOG_LEVEL", "WARNING").upper()

    @property
    def SEED(self) -> int:
        return int(os.getenv("FIBERMC_SEED", "0"))

    @property
    def FIBER_CAP(self) -> int:
        return int(os.getenv("FIBERMC_FIBER_CAP", "1000000"))

    @property
    def WORKERS(self) -> int:
        """Process pool size for replicate chains and scan candidates."""
        return int(os.getenv("FIBERMC_WORKERS", "1"))


settings = Settings()
