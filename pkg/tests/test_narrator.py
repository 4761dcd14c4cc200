import json

import pytest

from tabletalk import schema
from tabletalk.data import RankSpec, load_data
from tabletalk.errors import UnknownStart
from tabletalk.evaluator import random_database
from tabletalk.narrator import NarrationPlan, detect_patterns, fallback_mode, narrate

WOODY_DECLARATIVE = (
    "Woody Allen was born in Brooklyn, New York, USA on December 1, 1935. "
    "As a director, Woody Allen's work includes Match Point (2005), "
    "Melinda and Melinda (2004), and Anything Else (2003)."
)

WOODY_PROCEDURAL = (
    "Woody Allen was born in Brooklyn, New York, USA on December 1, 1935. "
    "As a director, Woody Allen's work includes Match Point, "
    "Melinda and Melinda, Anything Else. "
    "Match Point was released in 2005. "
    "Melinda and Melinda was released in 2004. "
    "Anything Else was released in 2003."
)

SPLIT_SENTENCE = (
    "The movie M1 involves the director D1 who was born in Italy "
    "and the actor A1 who is Greek."
)


class TestPatterns:
    def test_unary_with_relay(self, movie_graph):
        patterns = detect_patterns(movie_graph, NarrationPlan(start_relation="DIRECTOR"))
        assert len(patterns) == 1
        unary = patterns[0]
        assert unary.kind == "unary"
        assert unary.relations == ["DIRECTOR", "MOVIE"]
        assert unary.relay == "DIRECTED"

    def test_split_at_movie(self, split_graph):
        patterns = detect_patterns(split_graph, NarrationPlan())
        assert [p.kind for p in patterns] == ["split"]
        assert patterns[0].relations == ["MOVIE", "DIRECTOR", "ACTOR"]

    def test_single_relation_graph_has_no_patterns(self):
        graph = schema.loads(
            json.dumps(
                {
                    "relations": [
                        {"name": "ONLY", "heading": "x", "attributes": [{"name": "x"}]}
                    ],
                    "joins": [],
                }
            )
        )
        assert detect_patterns(graph, NarrationPlan()) == []

    def test_join_pattern_on_converging_branches(self):
        doc = {
            "relations": [
                {"name": n, "heading": "k", "attributes": [{"name": "k"}]}
                for n in ("A", "B", "C", "D")
            ],
            "joins": [
                {"from": "B", "to": "A", "from_key": "k", "to_key": "k",
                 "template": '"a to b " + {B.k}'},
                {"from": "C", "to": "A", "from_key": "k", "to_key": "k",
                 "template": '"a to c " + {C.k}'},
                {"from": "D", "to": "B", "from_key": "k", "to_key": "k",
                 "template": '"b to d " + {D.k}'},
                {"from": "D", "to": "C", "from_key": "k", "to_key": "k",
                 "template": '"c to d " + {D.k}'},
            ],
        }
        # Narration edges run A->B, A->C, B->D, C->D once re-anchored.
        doc["joins"][0].update({"from": "A", "to": "B"})
        doc["joins"][1].update({"from": "A", "to": "C"})
        doc["joins"][2].update({"from": "B", "to": "D"})
        doc["joins"][3].update({"from": "C", "to": "D"})
        graph = schema.loads(json.dumps(doc))
        kinds = [p.kind for p in detect_patterns(graph, NarrationPlan(start_relation="A"))]
        assert "split" in kinds
        assert "join" in kinds

    def test_unknown_start(self, movie_graph):
        with pytest.raises(UnknownStart):
            detect_patterns(movie_graph, NarrationPlan(start_relation="NOPE"))

    def test_each_relation_visited_at_most_once(self, movie_graph, split_graph):
        for graph in (movie_graph, split_graph):
            seen = []
            for inst in detect_patterns(graph, NarrationPlan()):
                seen.extend(inst.relations[1:])
            assert len(seen) == len(set(seen))


class TestNarrate:
    def test_declarative_golden(self, movie_graph, movie_db):
        narrative = narrate(movie_graph, movie_db, NarrationPlan())
        assert narrative.text == WOODY_DECLARATIVE
        assert narrative.mode_used == "declarative"

    def test_procedural_golden(self, movie_graph, movie_db):
        narrative = narrate(
            movie_graph, movie_db, NarrationPlan(mode="procedural")
        )
        assert narrative.text == WOODY_PROCEDURAL

    def test_split_golden(self, split_graph, split_db):
        narrative = narrate(split_graph, split_db, NarrationPlan())
        assert narrative.text == SPLIT_SENTENCE

    def test_relay_contributes_no_tokens(self, movie_graph, movie_db):
        narrative = narrate(movie_graph, movie_db, NarrationPlan())
        tokens = narrative.text.split()
        assert "DIRECTED" not in narrative.text
        # DIRECTED key cells are the bare integers 1..6
        assert not any(tok in {"1", "2", "3", "4", "5", "6"} for tok in tokens)

    @pytest.mark.parametrize("budget", [1, 2, 3])
    def test_tuple_budget_bounds_list_length(self, movie_graph, movie_db, budget):
        narrative = narrate(
            movie_graph, movie_db, NarrationPlan(tuple_budget=budget)
        )
        titles = ["Match Point", "Melinda and Melinda", "Anything Else"]
        mentioned = [t for t in titles if t in narrative.text]
        assert len(mentioned) == budget

    def test_empty_table_gives_diagnostic(self, movie_graph):
        headers = {
            "MOVIE": "id,title,year\n",
            "GENRE": "mid,genre\n",
            "DIRECTOR": "id,name,bdate,blocation\n",
            "DIRECTED": "mid,did\n",
            "CAST": "mid,aid,role\n",
            "ACTOR": "id,name\n",
        }
        db = load_data(movie_graph, headers)
        narrative = narrate(movie_graph, db, NarrationPlan())
        assert narrative.sentences == []
        assert narrative.diagnostics

    def test_determinism(self, movie_graph, movie_db):
        plan = NarrationPlan(mode="procedural", rank=RankSpec("year", True))
        assert narrate(movie_graph, movie_db, plan) == narrate(
            movie_graph, movie_db, plan
        )

    def test_procedural_total_on_random_databases(self, movie_graph):
        for seed in range(10):
            db = random_database(movie_graph, seed, 4)
            narrative = narrate(
                movie_graph, db, NarrationPlan(mode="procedural")
            )
            assert isinstance(narrative.text, str)
            assert "{" not in narrative.text and "}" not in narrative.text

    def test_relation_filter_restricts_steps(self, movie_graph, movie_db):
        plan = NarrationPlan(relation_filter=frozenset({"DIRECTOR"}))
        narrative = narrate(movie_graph, movie_db, plan)
        assert "work includes" not in narrative.text
        assert narrative.text.startswith("Woody Allen was born")


class TestSplitVariants:
    VAPID_DOC = {
        "relations": [
            {
                "name": "MOVIE", "heading": "title", "weight": 3,
                "noun": {"singular": "movie", "plural": "movies"},
                "attributes": [
                    {"name": "title"}, {"name": "did"}, {"name": "aid"}
                ],
            },
            {
                "name": "DIRECTOR", "heading": "dname",
                "noun": {"singular": "director", "plural": "directors"},
                "attributes": [
                    {"name": "id"},
                    {"name": "dname"},
                    {
                        "name": "blocation",
                        "template": '"The director " + {DIRECTOR.dname} + " was born in " + {DIRECTOR.blocation}',
                    },
                ],
            },
            {
                "name": "ACTOR", "heading": "aname",
                "noun": {"singular": "actor", "plural": "actors"},
                "attributes": [
                    {"name": "id"},
                    {"name": "aname"},
                    {
                        "name": "nationality",
                        "template": '"The actor " + {ACTOR.aname} + " is " + {ACTOR.nationality}',
                    },
                ],
            },
        ],
        "joins": [
            {
                "from": "MOVIE", "to": "DIRECTOR", "from_key": "did", "to_key": "id",
                "template": '"The movie " + {MOVIE.title} + " involves the director " + {DIRECTOR.dname}',
            },
            {
                "from": "MOVIE", "to": "ACTOR", "from_key": "aid", "to_key": "id",
                "template": '"The movie " + {MOVIE.title} + " involves the actor " + {ACTOR.aname}',
            },
        ],
    }

    DATA = {
        "MOVIE": "title,did,aid\nM1,1,1\n",
        "DIRECTOR": "id,dname,blocation\n1,D1,Italy\n",
        "ACTOR": "id,aname,nationality\n1,A1,Greek\n",
    }

    def test_without_relative_clauses_content_comes_as_sentences(self):
        graph = schema.loads(json.dumps(self.VAPID_DOC))
        db = load_data(graph, self.DATA)
        narrative = narrate(graph, db, NarrationPlan(mode="declarative"))
        assert narrative.sentences == [
            "The movie M1 involves the director D1 and the actor A1.",
            "The director D1 was born in Italy.",
            "The actor A1 is Greek.",
        ]

    def test_procedural_split_spells_out_branch_content(self, split_graph, split_db):
        narrative = narrate(split_graph, split_db, NarrationPlan(mode="procedural"))
        # No attribute templates in the split fixture, so only the fused
        # branch heads appear; relative clauses are a declarative device.
        assert narrative.text == (
            "The movie M1 involves the director D1 and the actor A1."
        )


class TestFallbackMode:
    def test_movie_fixture_is_declarative(self, movie_graph):
        assert fallback_mode(movie_graph, NarrationPlan()) == "declarative"

    def test_five_untemplated_attributes_force_procedural(self):
        doc = {
            "relations": [
                {
                    "name": "WIDE",
                    "heading": "h",
                    "attributes": [{"name": "h"}]
                    + [{"name": f"a{i}"} for i in range(5)],
                }
            ],
            "joins": [],
        }
        graph = schema.loads(json.dumps(doc))
        assert fallback_mode(graph, NarrationPlan()) == "procedural"
        doc["relations"][0]["long_template"] = '"all about " + {WIDE.h}'
        graph = schema.loads(json.dumps(doc))
        assert fallback_mode(graph, NarrationPlan()) == "declarative"

    def test_empty_database_is_declarative(self, movie_graph):
        # The mode choice never looks at the data.
        assert fallback_mode(movie_graph, NarrationPlan()) == "declarative"

    def test_wide_split_forces_procedural(self):
        doc = {
            "relations": [
                {"name": "HUB", "heading": "k", "attributes": [{"name": "k"}]},
            ]
            + [
                {"name": f"B{i}", "heading": "k", "attributes": [{"name": "k"}]}
                for i in range(3)
            ],
            "joins": [
                {
                    "from": "HUB", "to": f"B{i}", "from_key": "k", "to_key": "k",
                    "template": f'"branch {i} " + {{B{i}.k}}',
                }
                for i in range(3)
            ],
        }
        graph = schema.loads(json.dumps(doc))
        assert fallback_mode(graph, NarrationPlan(start_relation="HUB")) == "procedural"


class TestDeepTraversal:
    DOC = {
        "relations": [
            {
                "name": "STUDIO", "heading": "sname", "weight": 3,
                "noun": {"singular": "studio", "plural": "studios"},
                "attributes": [{"name": "id"}, {"name": "sname"}],
            },
            {
                "name": "FILM", "heading": "title",
                "noun": {"singular": "film", "plural": "films"},
                "attributes": [
                    {"name": "id"}, {"name": "title"}, {"name": "sid"}
                ],
            },
            {
                "name": "AWARD", "heading": "aname",
                "noun": {"singular": "award", "plural": "awards"},
                "attributes": [{"name": "aname"}, {"name": "fid"}],
            },
        ],
        "joins": [
            {
                "from": "FILM", "to": "STUDIO", "from_key": "sid", "to_key": "id",
            },
            {
                "from": "AWARD", "to": "FILM", "from_key": "fid", "to_key": "id",
            },
            {
                "from": "STUDIO", "to": "FILM", "from_key": "id", "to_key": "sid",
                "template": '{STUDIO.sname} + " produced " + DEFINE L AS [i < arityOf(FILM.title)] ", " + { {FILM.title} } [i = arityOf(FILM.title)] " and " + { {FILM.title} + "." }',
            },
            {
                "from": "FILM", "to": "AWARD", "from_key": "id", "to_key": "fid",
                "template": '"The films won " + DEFINE L AS [i < arityOf(AWARD.aname)] ", " + { {AWARD.aname} } [i = arityOf(AWARD.aname)] " and " + { {AWARD.aname} + "." }',
            },
        ],
    }

    DATA = {
        "STUDIO": "id,sname\n1,Pixmount\n",
        "FILM": "id,title,sid\n1,Alpha,1\n2,Beta,1\n",
        "AWARD": "aname,fid\nBest Song,1\nBest Score,2\n",
    }

    def test_two_step_chain_narrates_both_steps(self):
        graph = schema.loads(json.dumps(self.DOC))
        db = load_data(graph, self.DATA)
        narrative = narrate(graph, db, NarrationPlan())
        assert narrative.sentences == [
            "Pixmount produced Alpha and Beta.",
            "The films won Best Song and Best Score.",
        ]

    def test_budget_applies_at_every_depth(self):
        graph = schema.loads(json.dumps(self.DOC))
        db = load_data(graph, self.DATA)
        narrative = narrate(graph, db, NarrationPlan(tuple_budget=1))
        assert narrative.sentences == [
            "Pixmount produced Alpha.",
            "The films won Best Song.",
        ]


class TestShortAndLongTemplates:
    def test_short_template_used_when_no_attribute_clauses(self):
        doc = {
            "relations": [
                {
                    "name": "DIRECTOR",
                    "heading": "name",
                    "short_template": '"The director\'s name is " + {DIRECTOR.name}',
                    "attributes": [{"name": "name"}],
                }
            ],
            "joins": [],
        }
        graph = schema.loads(json.dumps(doc))
        db = load_data(graph, {"DIRECTOR": "name\nWoody Allen\n"})
        narrative = narrate(graph, db, NarrationPlan())
        assert narrative.text == "The director's name is Woody Allen."

    def test_long_template_wins_in_declarative_mode(self):
        doc = {
            "relations": [
                {
                    "name": "R",
                    "heading": "h",
                    "long_template": '{R.h} + " spans " + {R.x} + " and " + {R.y}',
                    "attributes": [
                        {"name": "h"},
                        {"name": "x", "template": '{R.h} + " has x " + {R.x}'},
                        {"name": "y", "template": '{R.h} + " has y " + {R.y}'},
                    ],
                }
            ],
            "joins": [],
        }
        graph = schema.loads(json.dumps(doc))
        db = load_data(graph, {"R": "h,x,y\nH,1,2\n"})
        declarative = narrate(graph, db, NarrationPlan(mode="declarative"))
        assert declarative.text == "H spans 1 and 2."
        # Without a long template the clauses fuse on their shared prefix.
        procedural = narrate(graph, db, NarrationPlan(mode="procedural"))
        assert procedural.text == "H has x 1 y 2."

    def test_attribute_weight_orders_clauses(self):
        doc = {
            "relations": [
                {
                    "name": "R",
                    "heading": "h",
                    "attributes": [
                        {"name": "h"},
                        {"name": "x", "template": '{R.h} + " aaa " + {R.x}'},
                        {
                            "name": "y",
                            "weight": 5,
                            "template": '{R.h} + " bbb " + {R.y}',
                        },
                    ],
                }
            ],
            "joins": [],
        }
        graph = schema.loads(json.dumps(doc))
        db = load_data(graph, {"R": "h,x,y\nH,1,2\n"})
        narrative = narrate(graph, db, NarrationPlan(mode="declarative"))
        assert narrative.text == "H bbb 2 aaa 1."
