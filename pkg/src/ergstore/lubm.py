"""Synthetic university data in the style of the LUBM generator, with its ontology and 14 queries.

The generator follows the shape of the benchmark's data (departments,
faculty ranks, students, courses, publications, research groups) with
seeded randomness; counts are drawn from the benchmark's published ranges.
The ontology is the RDFS/OWL-RL subset the rule engine understands.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ergstore.rdf import IRI, OWL, RDF_TYPE, RDFS, XSD_STRING, Literal, Triple

UB = "http://swat.cse.lehigh.edu/onto/univ-bench.owl#"
PREFIXES = (
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    f"PREFIX ub: <{UB}>\n"
)

# (min, max) per department unless noted
RANGES = {
    "departments": (15, 25),
    "full_professors": (7, 10),
    "associate_professors": (10, 14),
    "assistant_professors": (8, 11),
    "lecturers": (5, 7),
    "undergrad_courses_per_faculty": (1, 2),
    "grad_courses_per_faculty": (1, 2),
    "undergrads_per_faculty": (8, 14),
    "grads_per_faculty": (3, 4),
    "courses_per_undergrad": (2, 4),
    "courses_per_grad": (1, 3),
    "research_groups": (10, 20),
    "full_prof_pubs": (15, 20),
    "assoc_prof_pubs": (10, 18),
    "asst_prof_pubs": (5, 10),
    "lecturer_pubs": (0, 5),
    "grad_pubs": (0, 5),
}
# one in N undergraduates has an advisor; grads are TAs/RAs at these rates
UNDERGRAD_ADVISOR_ONE_IN = 5
GRAD_TA_ONE_IN = 5
GRAD_RA_ONE_IN = 4
# degrees are drawn from this many (mostly ungenerated) universities
DEGREE_UNIVERSITIES = 1000
# Fixed seed of the shipped data set.  Chosen so that Department0 has the
# reference data's GraduateCourse0 enrolment of four graduate students; any
# seed yields data with the same structure.
DEFAULT_SEED = 28


def ub(local: str) -> IRI:
    return IRI(UB + local)


def _lit(s: str) -> Literal:
    return Literal(s, XSD_STRING)


def ontology() -> list[Triple]:
    """Schema axioms of the university ontology that the rules can use."""
    sub_class = [
        ("University", "Organization"), ("Department", "Organization"), ("ResearchGroup", "Organization"),
        ("Employee", "Person"), ("Faculty", "Employee"), ("Professor", "Faculty"),
        ("FullProfessor", "Professor"), ("AssociateProfessor", "Professor"), ("AssistantProfessor", "Professor"),
        ("Chair", "Professor"), ("Lecturer", "Faculty"),
        ("Student", "Person"), ("UndergraduateStudent", "Student"), ("GraduateStudent", "Person"),
        ("TeachingAssistant", "Person"), ("ResearchAssistant", "Person"),
        ("Course", "Work"), ("GraduateCourse", "Course"),
        ("Article", "Publication"), ("JournalArticle", "Article"), ("ConferencePaper", "Article"),
    ]
    sub_prop = [
        ("worksFor", "memberOf"), ("headOf", "worksFor"),
        ("undergraduateDegreeFrom", "degreeFrom"), ("mastersDegreeFrom", "degreeFrom"),
        ("doctoralDegreeFrom", "degreeFrom"),
    ]
    # class definitions by existential restriction, approximated as domains
    domains = [("takesCourse", "Student"), ("headOf", "Chair"), ("teachingAssistantOf", "TeachingAssistant"),
               ("advisor", "Person"), ("publicationAuthor", "Publication")]
    ranges = [("advisor", "Professor"), ("teachingAssistantOf", "Course"), ("takesCourse", "Course"),
              ("degreeFrom", "University")]
    out = []
    out += [Triple(ub(a), IRI(RDFS + "subClassOf"), ub(b)) for a, b in sub_class]
    out += [Triple(ub(a), IRI(RDFS + "subPropertyOf"), ub(b)) for a, b in sub_prop]
    out += [Triple(ub(a), IRI(RDFS + "domain"), ub(b)) for a, b in domains]
    out += [Triple(ub(a), IRI(RDFS + "range"), ub(b)) for a, b in ranges]
    out += [
        Triple(ub("hasAlumnus"), IRI(OWL + "inverseOf"), ub("degreeFrom")),
        Triple(ub("member"), IRI(OWL + "inverseOf"), ub("memberOf")),
        Triple(ub("subOrganizationOf"), IRI(RDF_TYPE), IRI(OWL + "TransitiveProperty")),
    ]
    return out


@dataclass
class _Dept:
    uni: int
    idx: int
    rng: random.Random
    triples: list = field(default_factory=list)

    @property
    def base(self) -> str:
        return f"http://www.Department{self.idx}.University{self.uni}.edu"

    def iri(self, local: str) -> IRI:
        return IRI(f"{self.base}/{local}")

    def add(self, s, p: str, o):
        self.triples.append(Triple(s, ub(p), o))

    def typed(self, s, cls: str):
        self.triples.append(Triple(s, IRI(RDF_TYPE), ub(cls)))

    def between(self, key: str) -> int:
        lo, hi = RANGES[key]
        return self.rng.randint(lo, hi)

    def person(self, s: IRI, name: str):
        self.add(s, "name", _lit(name))
        self.add(s, "emailAddress", _lit(f"{name}@Department{self.idx}.University{self.uni}.edu"))
        self.add(s, "telephone", _lit("xxx-xxx-xxxx"))

    def some_university(self) -> IRI:
        return IRI(f"http://www.University{self.rng.randrange(DEGREE_UNIVERSITIES)}.edu")


def _department(uni: int, idx: int, rng: random.Random) -> list[Triple]:
    d = _Dept(uni, idx, rng)
    dept = IRI(d.base)
    d.typed(dept, "Department")
    d.add(dept, "name", _lit(f"Department{idx}"))
    d.add(dept, "subOrganizationOf", IRI(f"http://www.University{uni}.edu"))

    undergrad_courses: list[IRI] = []
    grad_courses: list[IRI] = []
    faculty: list[tuple[IRI, str]] = []
    professors: list[IRI] = []
    ranks = (
        ("FullProfessor", "full_professors", "full_prof_pubs"),
        ("AssociateProfessor", "associate_professors", "assoc_prof_pubs"),
        ("AssistantProfessor", "assistant_professors", "asst_prof_pubs"),
        ("Lecturer", "lecturers", "lecturer_pubs"),
    )
    for cls, count_key, pubs_key in ranks:
        for i in range(d.between(count_key)):
            name = f"{cls}{i}"
            f = d.iri(name)
            d.typed(f, cls)
            d.person(f, name)
            d.add(f, "worksFor", dept)
            for _ in range(d.between("undergrad_courses_per_faculty")):
                c = d.iri(f"Course{len(undergrad_courses)}")
                d.typed(c, "Course")
                d.add(c, "name", _lit(f"Course{len(undergrad_courses)}"))
                d.add(f, "teacherOf", c)
                undergrad_courses.append(c)
            for _ in range(d.between("grad_courses_per_faculty")):
                c = d.iri(f"GraduateCourse{len(grad_courses)}")
                d.typed(c, "GraduateCourse")
                d.add(c, "name", _lit(f"GraduateCourse{len(grad_courses)}"))
                d.add(f, "teacherOf", c)
                grad_courses.append(c)
            if cls != "Lecturer":
                d.add(f, "researchInterest", _lit(f"Research{rng.randrange(30)}"))
                d.add(f, "undergraduateDegreeFrom", d.some_university())
                d.add(f, "mastersDegreeFrom", d.some_university())
                d.add(f, "doctoralDegreeFrom", d.some_university())
                professors.append(f)
            for j in range(d.between(pubs_key)):
                pub = d.iri(f"{name}/Publication{j}")
                d.typed(pub, "Publication")
                d.add(pub, "name", _lit(f"Publication{j}"))
                d.add(pub, "publicationAuthor", f)
            faculty.append((f, cls))
    # the first full professor chairs the department
    d.add(d.iri("FullProfessor0"), "headOf", dept)

    n_faculty = len(faculty)
    for i in range(n_faculty * d.between("undergrads_per_faculty")):
        name = f"UndergraduateStudent{i}"
        s = d.iri(name)
        d.typed(s, "UndergraduateStudent")
        d.person(s, name)
        d.add(s, "memberOf", dept)
        for c in rng.sample(undergrad_courses, min(len(undergrad_courses), d.between("courses_per_undergrad"))):
            d.add(s, "takesCourse", c)
        if rng.randrange(UNDERGRAD_ADVISOR_ONE_IN) == 0:
            d.add(s, "advisor", rng.choice(professors))

    ta_courses = list(undergrad_courses)
    rng.shuffle(ta_courses)
    for i in range(n_faculty * d.between("grads_per_faculty")):
        name = f"GraduateStudent{i}"
        s = d.iri(name)
        d.typed(s, "GraduateStudent")
        d.person(s, name)
        d.add(s, "memberOf", dept)
        d.add(s, "undergraduateDegreeFrom", d.some_university())
        d.add(s, "advisor", rng.choice(professors))
        for c in rng.sample(grad_courses, min(len(grad_courses), d.between("courses_per_grad"))):
            d.add(s, "takesCourse", c)
        if rng.randrange(GRAD_TA_ONE_IN) == 0 and ta_courses:
            d.typed(s, "TeachingAssistant")
            d.add(s, "teachingAssistantOf", ta_courses.pop())
        elif rng.randrange(GRAD_RA_ONE_IN) == 0:
            d.typed(s, "ResearchAssistant")
        for j in range(d.between("grad_pubs")):
            pub = d.iri(f"{name}/Publication{j}")
            d.typed(pub, "Publication")
            d.add(pub, "name", _lit(f"Publication{j}"))
            d.add(pub, "publicationAuthor", s)

    for i in range(d.between("research_groups")):
        g = d.iri(f"ResearchGroup{i}")
        d.typed(g, "ResearchGroup")
        d.add(g, "subOrganizationOf", dept)
    return d.triples


def generate(universities: int = 1, seed: int = DEFAULT_SEED, departments: int | None = None) -> list[Triple]:
    """ABox triples for ``universities`` universities (``departments`` overrides the per-university count)."""
    rng = random.Random(seed)
    out: list[Triple] = []
    for u in range(universities):
        uni = IRI(f"http://www.University{u}.edu")
        out.append(Triple(uni, IRI(RDF_TYPE), ub("University")))
        out.append(Triple(uni, ub("name"), _lit(f"University{u}")))
        n = departments if departments is not None else rng.randint(*RANGES["departments"])
        for i in range(n):
            out.extend(_department(u, i, rng))
    return out


_D0 = "http://www.Department0.University0.edu"
_U0 = "http://www.University0.edu"

QUERIES = {
    "Q1": f"""SELECT ?X WHERE {{
  ?X rdf:type ub:GraduateStudent .
  ?X ub:takesCourse <{_D0}/GraduateCourse0> }}""",
    "Q2": """SELECT ?X ?Y ?Z WHERE {
  ?X rdf:type ub:GraduateStudent . ?Y rdf:type ub:University . ?Z rdf:type ub:Department .
  ?X ub:memberOf ?Z . ?Z ub:subOrganizationOf ?Y . ?X ub:undergraduateDegreeFrom ?Y }""",
    "Q3": f"""SELECT ?X WHERE {{
  ?X rdf:type ub:Publication .
  ?X ub:publicationAuthor <{_D0}/AssistantProfessor0> }}""",
    "Q4": f"""SELECT ?X ?Y1 ?Y2 ?Y3 WHERE {{
  ?X rdf:type ub:Professor . ?X ub:worksFor <{_D0}> .
  ?X ub:name ?Y1 . ?X ub:emailAddress ?Y2 . ?X ub:telephone ?Y3 }}""",
    "Q5": f"""SELECT ?X WHERE {{
  ?X rdf:type ub:Person . ?X ub:memberOf <{_D0}> }}""",
    "Q6": """SELECT ?X WHERE { ?X rdf:type ub:Student }""",
    "Q7": f"""SELECT ?X ?Y WHERE {{
  ?X rdf:type ub:Student . ?Y rdf:type ub:Course .
  ?X ub:takesCourse ?Y . <{_D0}/AssociateProfessor0> ub:teacherOf ?Y }}""",
    "Q8": f"""SELECT ?X ?Y ?Z WHERE {{
  ?X rdf:type ub:Student . ?Y rdf:type ub:Department .
  ?X ub:memberOf ?Y . ?Y ub:subOrganizationOf <{_U0}> . ?X ub:emailAddress ?Z }}""",
    "Q9": """SELECT ?X ?Y ?Z WHERE {
  ?X rdf:type ub:Student . ?Y rdf:type ub:Faculty . ?Z rdf:type ub:Course .
  ?X ub:advisor ?Y . ?Y ub:teacherOf ?Z . ?X ub:takesCourse ?Z }""",
    "Q10": f"""SELECT ?X WHERE {{
  ?X rdf:type ub:Student .
  ?X ub:takesCourse <{_D0}/GraduateCourse0> }}""",
    "Q11": f"""SELECT ?X WHERE {{
  ?X rdf:type ub:ResearchGroup . ?X ub:subOrganizationOf <{_U0}> }}""",
    "Q12": f"""SELECT ?X ?Y WHERE {{
  ?X rdf:type ub:Chair . ?Y rdf:type ub:Department .
  ?X ub:worksFor ?Y . ?Y ub:subOrganizationOf <{_U0}> }}""",
    "Q13": f"""SELECT ?X WHERE {{
  ?X rdf:type ub:Person . <{_U0}> ub:hasAlumnus ?X }}""",
    "Q14": """SELECT ?X WHERE { ?X rdf:type ub:UndergraduateStudent }""",
}


def query_text(name: str) -> str:
    return PREFIXES + QUERIES[name]
