"""Synthetic world -> replayed extraction -> design matrices, for tests."""

from heritage_assess.classifier import FEATURE_SETS, RegisterInfo, encode
from heritage_assess.llm import BuildingContext, ExtractionFailed, ExtractionRequest, ReplayBackend, extract


def extract_world(world):
    backend = ReplayBackend(world.responses)
    feats, failed = [], []
    for b in world.buildings:
        req = ExtractionRequest(image=b.id.encode(), address=b.address, retry_limit=0)
        try:
            feats.append(extract(req, BuildingContext(b.id, f"{b.id}/000"), backend))
        except ExtractionFailed:
            failed.append(b.id)
    return feats, failed


def world_matrices(world):
    feats, _ = extract_world(world)
    labels = {b.id: b.heritage_target for b in world.buildings}
    register = {b.id: RegisterInfo(b.construction_year, b.construction_period, b.building_type) for b in world.buildings}
    return {fs: encode(feats, labels, register, fs) for fs in FEATURE_SETS}
