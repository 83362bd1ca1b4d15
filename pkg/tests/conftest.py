from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import pytest

from config import ColumnMapping
from models.trajectory import CfEvent
from services.fleet_service import generate_synthetic_fleet, make_event_from_arrays

NGSIM_COLUMNS = list(ColumnMapping().required_columns().values())


def pair_rows(
    frames,
    leader_id: int = 1,
    follower_id: int = 2,
    gap: float = 20.0,
    speed: float = 10.0,
    lane: int = 1,
    length: float = 4.5,
    preceding: Optional[Dict[int, int]] = None,
) -> List[dict]:
    """등속 선행/후행차 한 쌍의 NGSIM 형식 행. preceding 으로 특정 프레임의 Preceding 값을 바꿀 수 있음"""
    preceding = preceding or {}
    rows = []
    for frame in frames:
        follower_position = speed * frame * 0.1
        rows.append({
            "Vehicle_ID": leader_id, "Frame_ID": frame, "Local_Y": follower_position + gap + length,
            "v_Vel": speed, "v_Acc": 0.0, "Lane_ID": lane, "Preceding": 0, "v_Length": length,
        })
        rows.append({
            "Vehicle_ID": follower_id, "Frame_ID": frame, "Local_Y": follower_position,
            "v_Vel": speed, "v_Acc": 0.0, "Lane_ID": lane, "Preceding": preceding.get(frame, leader_id),
            "v_Length": length,
        })
    return rows


def write_table(path: Path, rows: List[dict], columns: Optional[List[str]] = None) -> Path:
    pd.DataFrame(rows, columns=columns or NGSIM_COLUMNS).to_csv(path, index=False)
    return path


@pytest.fixture
def constant_event() -> CfEvent:
    """선행차/후행차 모두 20 m/s 등속, 간격 30 m, 200 샘플"""
    return make_event_from_arrays(1, np.full(200, 20.0), np.zeros(200), 30.0, 20.0)


@pytest.fixture
def varying_event() -> CfEvent:
    """선행차 정현파 속도, 후행차 작은 가속도 변화가 있는 정확한 운동학 이벤트"""
    n = 180
    t = np.arange(n) * 0.1
    leader_speed = 15.0 + 2.0 * np.sin(t / 2.0)
    accelerations = 0.4 * np.sin(t / 1.5)
    return make_event_from_arrays(7, leader_speed, accelerations, 25.0, 15.0)


@pytest.fixture
def stopped_leader_event() -> CfEvent:
    """정지한 선행차 뒤 10 m 에서 10 m/s 로 접근하는 후행차"""
    return make_event_from_arrays(3, np.zeros(160), np.zeros(160), 10.0, 10.0)


@pytest.fixture(scope="session")
def small_fleet() -> List[CfEvent]:
    return generate_synthetic_fleet(6, seed=0)
