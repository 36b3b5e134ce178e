use std::collections::{BTreeMap, HashMap, HashSet};

use datagarden_core::encoder::{bin_count, scale_linear};
use datagarden_core::layout::{ground_distance, group_members, Groupable};
use datagarden_core::mapping::{print_mapping, Arm, ArmKey, ChannelBinding, Encoding, PaletteMode};
use datagarden_core::scene::SceneInfo;
use datagarden_core::*;
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,6}".prop_filter("keyword", |s| s != "default")
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, (-1000i32..1000).prop_map(f64::from)]
}

fn binding() -> impl Strategy<Value = ChannelBinding> {
    prop_oneof![
        ident().prop_map(|q| ChannelBinding::new(
            q,
            Encoding::Color {
                palette: PaletteMode::Distinct
            }
        )),
        (ident(), ident(), proptest::collection::btree_set(-1000i64..1000, 1..6)).prop_map(|(q, n, t)| {
            ChannelBinding::new(
                q,
                Encoding::Satellites {
                    name: n,
                    thresholds: t.into_iter().map(|v| v as f64 / 8.0).collect(),
                },
            )
        }),
        (ident(), 0.01..10.0f64, 0.01..10.0f64).prop_map(|(q, a, w)| ChannelBinding::new(
            q,
            Encoding::Scale { lo: a, hi: a + w }
        )),
    ]
}

fn archetype() -> impl Strategy<Value = ChannelBinding> {
    (
        ident(),
        proptest::collection::btree_map(ident(), ident(), 1..5),
        proptest::option::of(ident()),
    )
        .prop_map(|(q, arms, default)| {
            let mut arms: Vec<Arm> = arms
                .into_iter()
                .map(|(k, v)| Arm::new(ArmKey::Value(k), v))
                .collect();
            if let Some(d) = default {
                arms.push(Arm::new(ArmKey::Default, d));
            }
            ChannelBinding::new(q, Encoding::Archetype { arms })
        })
}

fn spec() -> impl Strategy<Value = MappingSpec> {
    (archetype(), proptest::collection::vec(binding(), 0..5)).prop_map(|(arch, rest)| {
        let mut seen = HashSet::new();
        let mut bindings = vec![arch];
        for b in rest {
            if seen.insert(b.channel()) {
                bindings.push(b);
            }
        }
        MappingSpec::new(bindings).unwrap()
    })
}

proptest! {
    #[test]
    fn mapping_print_parse_round_trip(spec in spec()) {
        let printed = print_mapping(&spec);
        let back = parse_mapping(&printed).unwrap();
        prop_assert_eq!(&back, &spec);
    }

    #[test]
    fn legend_has_one_entry_per_binding(spec in spec()) {
        let schema = SurveySchema::new(vec![survey::Question::new(
            "unrelated",
            survey::QuestionKind::Text,
        )])
        .unwrap();
        let legend = derive_legend(&spec, &schema, &[]);
        prop_assert_eq!(legend.entries.len(), spec.bindings().len());
    }

    #[test]
    fn binning_is_monotone_and_matches_definition(
        thresholds in proptest::collection::btree_set(-50i32..50, 1..8),
        a in -60.0..60.0f64,
        b in -60.0..60.0f64,
    ) {
        let t: Vec<f64> = thresholds.into_iter().map(f64::from).collect();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bin_count(lo, &t) <= bin_count(hi, &t));
        prop_assert_eq!(bin_count(a, &t), t.iter().filter(|&&x| a >= x).count());
    }

    #[test]
    fn palette_is_injective(k in 1usize..=360) {
        let cats: Vec<String> = (0..k).map(|i| format!("c{i:03}")).collect();
        let hues: HashSet<u64> = cats
            .iter()
            .map(|c| palette_color(c, &cats).unwrap().h.to_bits())
            .collect();
        prop_assert_eq!(hues.len(), k);
        let in_range = cats
            .iter()
            .all(|c| (0.0..360.0).contains(&palette_color(c, &cats).unwrap().h));
        prop_assert!(in_range);
    }

    #[test]
    fn scale_stays_in_output_range(v in finite(), lo in 0.01..5.0f64, w in 0.01..5.0f64) {
        let s = scale_linear(v, 0.0, 10.0, lo, lo + w);
        prop_assert!(s >= lo && s <= lo + w);
    }

    #[test]
    fn organic_invariants(n in 0usize..100, seed in any::<u64>(), sep in 0.5..1.5f64) {
        let bounds = Bounds::new(30.0, 20.0).unwrap();
        let ids: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let layout = organic_layout(&ids, bounds, sep, seed).unwrap();
        prop_assert_eq!(layout.len(), n);
        let pts: Vec<&Position> = layout.positions.values().collect();
        for (i, p) in pts.iter().enumerate() {
            prop_assert!(bounds.contains(p));
            for q in &pts[i + 1..] {
                prop_assert!(ground_distance(p, q) >= sep);
            }
        }
        prop_assert_eq!(organic_layout(&ids, bounds, sep, seed).unwrap(), layout);
    }

    #[test]
    fn grouped_partitions_and_never_collides(
        values in proptest::collection::vec(proptest::option::of(0usize..3), 0..80),
        spacing in 0.5..3.0f64,
    ) {
        let schema = parse_schema("question g : categorical { a, b, c }").unwrap();
        let names = ["a", "b", "c"];
        let recs: Vec<ResponseRecord> = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let r = ResponseRecord::new(format!("id{i}"));
                match v {
                    Some(k) => r.with("g", Answer::Category(names[*k].into())),
                    None => r,
                }
            })
            .collect();
        let layout = grouped_layout(&recs, "g", &schema, spacing).unwrap();
        prop_assert_eq!(layout.len(), recs.len());
        let distinct: HashSet<[u64; 3]> = layout
            .positions
            .values()
            .map(|p| p.map(f64::to_bits))
            .collect();
        prop_assert_eq!(distinct.len(), recs.len());

        // block membership: x-extent of each group is disjoint from every other group
        let groups = group_members(&recs, "g", &schema).unwrap();
        let extents: Vec<(f64, f64)> = groups
            .iter()
            .map(|(_, ids)| {
                let xs = ids.iter().map(|id| layout.positions[id][0]);
                (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max))
            })
            .collect();
        for w in extents.windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
        let by_value: HashMap<Option<&str>, usize> = groups
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v.as_deref(), i))
            .collect();
        for r in &recs {
            let g = by_value[&r.group_value("g")];
            let x = layout.positions[r.entity_id()][0];
            prop_assert!(x >= extents[g].0 && x <= extents[g].1);
        }
    }

    #[test]
    fn transition_ends_exactly(
        pts in proptest::collection::btree_map("[a-z]{1,4}", (finite(), finite(), finite(), finite()), 0..30),
        duration in 0.01..5.0f64,
        stagger in 0.0..0.5f64,
        extra in 0.0..10.0f64,
    ) {
        let from = LayoutResult {
            positions: pts.iter().map(|(k, (a, b, _, _))| (k.clone(), [*a, 0.0, *b])).collect(),
        };
        let to = LayoutResult {
            positions: pts.iter().map(|(k, (_, _, c, d))| (k.clone(), [*c, 0.0, *d])).collect(),
        };
        let plan = plan_transition(&from, &to, duration, stagger).unwrap();
        prop_assert_eq!(
            plan.entities.keys().collect::<Vec<_>>(),
            from.positions.keys().collect::<Vec<_>>()
        );
        for (id, step) in &plan.entities {
            prop_assert!(step.delay >= 0.0);
            prop_assert_eq!(plan.position_at(id, step.delay + step.duration + extra).unwrap(), to.positions[id]);
            prop_assert_eq!(plan.position_at(id, 0.0).unwrap(), from.positions[id]);
        }
    }

    #[test]
    fn responses_parse_totally_and_deterministically(
        rows in proptest::collection::vec((proptest::option::of(0usize..2), proptest::option::of(0u8..=100)), 0..40)
    ) {
        let schema = parse_schema("question role : categorical { student, faculty }\nquestion n : numeric [0, 10]").unwrap();
        let mut text = String::from("role,n\n");
        for (role, n) in &rows {
            let role = role.map_or("", |r| ["student", "faculty"][r]);
            let n = n.map_or(String::new(), |v| format!("{}", f64::from(v) / 10.0));
            text.push_str(&format!("{role},{n}\n"));
        }
        let a = parse_responses(&text, &schema).unwrap();
        let b = parse_responses(&text, &schema).unwrap();
        prop_assert_eq!(a.len(), rows.len());
        prop_assert_eq!(&a, &b);
        for (i, r) in a.iter().enumerate() {
            prop_assert_eq!(&r.id, &format!("r{i}"));
        }
        prop_assert!(validate_records(&a, &schema).is_empty());
    }
}

#[test]
fn scene_round_trip_small() {
    let schema = parse_schema("question role : categorical { student, faculty }").unwrap();
    let entities = vec![GardenEntity {
        id: "x\"y".into(),
        archetype: "flower".into(),
        color: Hsl { h: 1.0 / 3.0, s: 70.0, l: 50.0 },
        satellites: BTreeMap::new(),
        scale: 1e-7,
        tooltip: vec![("role".into(), "étudiant ✿".into())],
    }];
    let layout = LayoutResult {
        positions: BTreeMap::from([("x\"y".to_string(), [0.1 + 0.2, 0.0, 1e21])]),
    };
    let doc = assemble_scene(
        entities,
        &layout,
        Legend::default(),
        Bounds::new(1.0, 1.0).unwrap(),
        schema,
        SceneInfo::default(),
    )
    .unwrap();
    let text = serialize_scene(&doc);
    let back = parse_scene(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(serialize_scene(&back), text);
}
