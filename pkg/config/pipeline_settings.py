from .base_settings import BaseSettings


class PipelineSettings(BaseSettings):
    """셀 계산 파이프라인 기본값"""

    # relation 빌드
    RELATION_MODE: str = "padded"        # "padded" or "sampled"
    SAMPLES_PER_CELL: int = 3            # 축당 샘플 수 (1 = 셀 중심)
    LIPSCHITZ_SAMPLES: int = 4           # 샘플 기반 Lipschitz 추정, 축당 점 수
    LIPSCHITZ_INFLATION: float = 1.10    # 샘플 기반 추정치 안전 배율

    # conley / chain
    STRICT_SAMPLE_BUDGET: int = 256      # is_strict 에서 검사할 셀 수
    BLOCK_MARGIN_CELLS: int = 8          # find_block 이웃 N = A 의 k-셀 팽창
    CMW_CAP: int = 16                    # 합집합 전체 열거 상한 (basic 개수)

    # coding
    CHAOS_STEPS: int = 100_000
    CHAOS_BURN_IN: int = 100
    FIBER_ADDRESSES: int = 32
    FIBER_POINTS: int = 8
    FIBER_DEPTH: int = 60
    FIBER_TOL: float = 1e-6

    # render
    IMAGE_SIZE: int = 512
