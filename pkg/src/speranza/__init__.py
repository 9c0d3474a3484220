"""Privacy-preserving package signing with identity co-commitments."""

from .cocommit import CoCommitGraph, coco_commit, coco_prove, coco_verify, fill_graph, verify_graph
from .commitments import (
    Commitment,
    CommitmentKey,
    EqualityProof,
    PublicParams,
    commit,
    generate,
    prove_eq,
    verify,
    verify_eq,
)
from .errors import (
    AuthorizationError,
    CertificateError,
    DecodeError,
    ProofError,
    SperanzaError,
    TokenError,
)
from .group import RISTRETTO255, TOY, TOY_SMALL, Group, ToyGroup
from .identity import Certificate, CertificateAuthority, IdentityProvider, OIDCToken
from .protocols import (
    Actors,
    Repository,
    SignatureBundle,
    Verdict,
    register_package,
    setup_actors,
    sign_package,
    verify_package,
)

__version__ = "0.1.0"
