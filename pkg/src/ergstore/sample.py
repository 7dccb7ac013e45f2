"""The small mythology dataset used in the worked example and the docs."""

from __future__ import annotations

from importlib import resources

from ergstore.rdf import Triple, read_ntriples

SP = "http://sampleRDF.org/"

SAMPLE_QUERY = f"""PREFIX sp: <{SP}>
SELECT * WHERE {{
  ?P rdf:type sp:god .
  OPTIONAL {{ ?P sp:father ?F . }}
}}"""


def sample_bytes() -> bytes:
    return resources.files("ergstore").joinpath("data/roman.nt").read_bytes()


def sample_triples() -> list[Triple]:
    return list(read_ntriples(sample_bytes(), scope="roman"))
