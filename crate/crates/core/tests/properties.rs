use std::collections::BTreeMap;

use proptest::prelude::*;

use npi_synth::cdnpi::{
    c_of, d_of, is_consistent, to_ice, CdnpiSample, ConjunctionConstraint, Constraint,
    DisjunctionConstraint, InductivityConstraint,
};
use npi_synth::ice::{houdini_passive, Candidate, Conjunction, IceSample, Universes, Valuation};
use npi_synth::logic::{
    is_nnf, nnf, parse_formula, parse_program, substitute_formula, CmpOp, Formula, HoleId,
    Program, Quantified, Sort, Substitution, Term,
};
use npi_synth::quant::collect_terms;
use npi_synth::solver::{parse_all, Model};

fn program() -> Program {
    parse_program(
        "var x: int; var y: int; var a: [int]int; function f(int): int;
         procedure p() ensures true; { }",
    )
    .unwrap()
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::int_var("x")),
        Just(Term::int_var("y")),
        (0i64..20).prop_map(Term::Int),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            (2i64..4, inner.clone()).prop_map(|(k, a)| Term::Mul(k, Box::new(a))),
            inner.clone().prop_map(|i| Term::select(Term::var("a", Sort::Array), i)),
            inner.prop_map(|i| Term::App("f".into(), vec![i], Sort::Int)),
        ]
    })
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
    ]
}

fn qf_formula() -> impl Strategy<Value = Formula> {
    let atom = prop_oneof![
        (cmp_op(), term(), term()).prop_map(|(op, a, b)| Formula::cmp(op, a, b)),
        Just(Formula::True),
        Just(Formula::False),
    ];
    atom.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Iff(Box::new(a), Box::new(b))),
        ]
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    (qf_formula(), 0..3usize).prop_map(|(body, q)| {
        let bind = |body: Formula| Quantified {
            vars: vec![("k".into(), Sort::Int)],
            triggers: vec![],
            body: Box::new(body),
        };
        let k_body = substitute_formula(
            &body,
            &[("y".to_string(), Term::int_var("k"))].into_iter().collect(),
        );
        match q {
            0 => body,
            1 => Formula::Forall(bind(k_body)),
            _ => Formula::Exists(bind(k_body)),
        }
    })
}

fn model(x: i64, y: i64, entries: &[(i64, i64)], f_off: i64) -> Model {
    let mut arr = "((as const (Array Int Int)) 0)".to_string();
    for (i, v) in entries {
        arr = format!("(store {arr} {} {})", lit(*i), lit(*v));
    }
    let text = format!(
        "(model (define-fun x () Int {}) (define-fun y () Int {}) \
         (define-fun a () (Array Int Int) {arr}) \
         (define-fun f ((z Int)) Int (+ z {})))",
        lit(x),
        lit(y),
        lit(f_off)
    );
    Model::from_sexpr(&parse_all(&text).unwrap()[0]).unwrap()
}

fn lit(v: i64) -> String {
    if v < 0 {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

fn model_strategy() -> impl Strategy<Value = (i64, i64, Vec<(i64, i64)>, i64)> {
    (
        -5i64..25,
        -5i64..25,
        prop::collection::vec((0i64..30, -5i64..30), 0..4),
        -3i64..4,
    )
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(f in formula()) {
        let p = program();
        let text = f.to_string();
        let back = parse_formula(&text, &p).map_err(|e| TestCaseError::fail(format!("{text}: {}", e.msg)))?;
        prop_assert_eq!(back, f);
    }

    #[test]
    fn nnf_agrees_with_input((x, y, es, off) in model_strategy(), f in qf_formula()) {
        let m = model(x, y, &es, off);
        let g = nnf(&f);
        prop_assert!(is_nnf(&g));
        prop_assert_eq!(m.eval_formula(&g), m.eval_formula(&f));
    }

    #[test]
    fn substitution_commutes_with_evaluation(
        (x, y, es, off) in model_strategy(),
        f in qf_formula(),
        t in term(),
    ) {
        let m = model(x, y, &es, off);
        let Ok(v) = m.eval_term(&t) else { return Ok(()); };
        let npi_synth::solver::Value::Int(v) = v else { return Ok(()); };
        let s: Substitution = [("x".to_string(), t)].into_iter().collect();
        let lhs = m.eval_formula(&substitute_formula(&f, &s));
        let rhs = model(v, y, &es, off).eval_formula(&f);
        if let (Ok(a), Ok(b)) = (lhs, rhs) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn pool_grows_with_depth(f in qf_formula()) {
        let small = collect_terms(&f, 0);
        let big = collect_terms(&f, 1);
        prop_assert!(small.is_subset(&big));
    }
}

fn hole(i: usize) -> HoleId {
    HoleId::new(format!("H{i}"))
}

fn universes() -> impl Strategy<Value = Universes> {
    prop::collection::vec(1usize..4, 1..3)
        .prop_map(|ns| ns.into_iter().enumerate().map(|(i, n)| (hole(i), n)).collect())
}

fn atoms(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(any::<bool>(), n)
        .prop_map(|bs| bs.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect())
}

fn hole_atoms(u: &Universes) -> impl Strategy<Value = (HoleId, Vec<usize>)> {
    let holes: Vec<(HoleId, usize)> = u.iter().map(|(h, n)| (h.clone(), *n)).collect();
    prop::sample::select(holes).prop_flat_map(|(h, n)| atoms(n).prop_map(move |a| (h.clone(), a)))
}

fn constraint(u: &Universes) -> impl Strategy<Value = Constraint> {
    prop_oneof![
        hole_atoms(u).prop_map(|(h, a)| Constraint::Weakening(DisjunctionConstraint::new(h, a))),
        hole_atoms(u).prop_map(|(h, a)| Constraint::Strengthening(ConjunctionConstraint::new(h, a))),
        (hole_atoms(u), hole_atoms(u)).prop_map(|((h, a), (g, b))| {
            Constraint::Inductivity(InductivityConstraint {
                lhs: ConjunctionConstraint::new(h, a),
                rhs: DisjunctionConstraint::new(g, b),
            })
        }),
    ]
}

fn candidate(u: &Universes) -> impl Strategy<Value = Candidate> {
    let parts: Vec<_> = u
        .iter()
        .map(|(h, n)| {
            let h = h.clone();
            atoms(*n).prop_map(move |a| (h.clone(), Conjunction::new(h.clone(), a)))
        })
        .collect();
    parts.prop_map(|v| v.into_iter().collect::<BTreeMap<_, _>>())
}

fn valuation(u: &Universes) -> impl Strategy<Value = Valuation> {
    let holes: Vec<(HoleId, usize)> = u.iter().map(|(h, n)| (h.clone(), *n)).collect();
    prop::sample::select(holes).prop_flat_map(|(h, n)| {
        prop::collection::vec(any::<bool>(), n).prop_map(move |b| Valuation::new(h.clone(), b))
    })
}

fn ice_sample(u: &Universes) -> impl Strategy<Value = IceSample> {
    (
        prop::collection::btree_set(valuation(u), 0..4),
        prop::collection::btree_set(valuation(u), 0..2),
        prop::collection::btree_set((valuation(u), valuation(u)), 0..4),
    )
        .prop_map(|(positives, negatives, implications)| IceSample {
            positives,
            negatives,
            implications,
        })
}

proptest! {
    #[test]
    fn translation_preserves_consistency(
        (u, cs, cand) in universes().prop_flat_map(|u| {
            (Just(u.clone()), prop::collection::vec(constraint(&u), 0..6), candidate(&u))
        })
    ) {
        let mut s = CdnpiSample::default();
        for c in cs {
            s.add(c);
        }
        prop_assert_eq!(is_consistent(&cand, &s).unwrap(), to_ice(&s, &u).is_consistent(&cand));
    }

    #[test]
    fn sample_text_round_trips(
        cs in universes().prop_flat_map(|u| prop::collection::vec(constraint(&u), 0..6))
    ) {
        let mut s = CdnpiSample::default();
        for c in cs {
            s.add(c);
        }
        prop_assert_eq!(CdnpiSample::from_text(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn c_and_d_are_injective(n in 1usize..6, a in atoms(5), b in atoms(5)) {
        let a: Vec<usize> = a.into_iter().filter(|i| *i < n).collect();
        let b: Vec<usize> = b.into_iter().filter(|i| *i < n).collect();
        let h = HoleId::new("H");
        let (ea, eb) = (ConjunctionConstraint::new(h.clone(), a.clone()), ConjunctionConstraint::new(h.clone(), b.clone()));
        let (xa, xb) = (DisjunctionConstraint::new(h.clone(), a), DisjunctionConstraint::new(h, b));
        prop_assert_eq!(c_of(&ea, n) == c_of(&eb, n), ea == eb);
        prop_assert_eq!(d_of(&xa, n) == d_of(&xb, n), xa == xb);
    }

    #[test]
    fn houdini_is_consistent_and_antitone(
        (u, s, extra) in universes().prop_flat_map(|u| {
            (Just(u.clone()), ice_sample(&u), ice_sample(&u))
        })
    ) {
        let mut bigger = s.clone();
        bigger.positives.extend(extra.positives);
        bigger.negatives.extend(extra.negatives);
        bigger.implications.extend(extra.implications);
        if let Ok(c) = houdini_passive(&s, &u) {
            prop_assert!(s.is_consistent(&c));
            if let Ok(d) = houdini_passive(&bigger, &u) {
                prop_assert!(bigger.is_consistent(&d));
                for (h, conj) in &d {
                    prop_assert!(conj.atoms.is_subset(&c[h].atoms));
                }
            }
        } else {
            prop_assert!(houdini_passive(&bigger, &u).is_err());
        }
    }
}
