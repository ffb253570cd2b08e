from dotenv import load_dotenv

from .pipeline_settings import PipelineSettings

# .env 로드 (CONLEY_IFS_* 환경변수)
load_dotenv()


def get_settings() -> PipelineSettings:
    """환경변수와 .env 에서 설정을 읽어 반환"""
    return PipelineSettings()


# 전역 설정 인스턴스
settings = get_settings()
