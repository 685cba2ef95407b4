from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    # Monte Carlo defaults (CLI flags and experiment files override these)
    seed: int = 20240101
    trials: int = 100_000
    threads: int = 1
    
    # Mutual-information tables
    mi_quadrature_order: int = 16
    mi_grid_lo_db: float = -20.0
    mi_grid_hi_db: float = 40.0
    mi_grid_step_db: float = 0.25
    mi_cache_dir: Optional[str] = None  # CSV cache, one file per constellation order
    
    # SNR contour search
    search_lo_db: float = -20.0
    search_hi_db: float = 40.0
    search_tol_db: float = 0.1
    
    # API
    api_host: str = "0.0.0.0"
    api_port: int = 8000
    api_trials_cap: int = 20_000
    
    log_level: str = "INFO"
    
    class Config:
        env_file = ".env"
        env_prefix = "DDF_"
        case_sensitive = False


settings = Settings()
