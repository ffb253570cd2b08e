from pydantic_settings import BaseSettings as _PydanticBaseSettings


class BaseSettings(_PydanticBaseSettings):
    """공통 설정: 실행 환경 (스레드, 시드, 출력, 로그)"""

    # 실행 환경
    THREADS: int = 1                 # relation 빌드/태스크 병렬 수
    SEED: int = 0xC0FFEE             # 주소 샘플링, chaos game 기본 시드
    OUTPUT_DIR: str = "output"
    LOG_LEVEL: str = "INFO"

    model_config = {
        "env_prefix": "CONLEY_IFS_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }
