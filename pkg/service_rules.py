from pydantic import BaseModel, ConfigDict, Field


class Tolerances(BaseModel):
    model_config = ConfigDict(validate_assignment=True)

    recon: float = Field(1e-10, gt=0)            # Schur reconstruction, scaled by d * ||A||_F
    unitary: float = Field(1e-12, gt=0)
    orthonormal: float = Field(1e-12, gt=0)      # frame^H frame = I, scaled by sqrt(d)
    rank: float = Field(1e-10, gt=0)             # relative singular value threshold
    angle: float = Field(1e-8, gt=0)             # principal angle cosine >= 1 - angle
    complement_gap: float = Field(1e-10, gt=0)   # range/kernel cosine <= 1 - complement_gap
    cluster: float = Field(1e-7, gt=0)           # eigenvalue chaining, scaled by ||T||
    boundary: float = Field(1e-9, gt=0)
    commutator: float = Field(1e-10, gt=0)
    merge: float = Field(1e-9, gt=0)
    mass: float = Field(1e-12, gt=0)
    invariance: float = Field(1e-8, gt=0)
    annihilation: float = Field(1e-8, gt=0)
    commutation: float = Field(1e-8, gt=0)
    idempotent_cond_max: float = Field(1e12, gt=0)
    subspace: float = Field(1e-8, gt=0)          # subspace distances in reports
    measure: float = Field(1e-8, gt=0)           # measure distances in reports
    log_det_floor: float = Field(1e-14, gt=0)
    alpha_floor: float = Field(1e-6, gt=0)
    radius_slack: float = Field(1e-12, gt=0)
    horner: float = Field(1e-10, gt=0)


TOLERANCES = Tolerances()
