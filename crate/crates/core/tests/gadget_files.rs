use gadgetsmith::encode::{GadgetProblem, GadgetSpec, WindowMode};
use gadgetsmith::gadgets::{
    gs_clause, gs_composed, load_library, parse_gadget, render_gadget, save_gadget, Gadget, Library,
};
use gadgetsmith::oracle::verify_gadget;
use gadgetsmith::search::{search_size_ladder, SearchOptions, SearchOutcome, SearchVariant};
use gadgetsmith::{Error, Family, Sign};

fn searched(family: &Family, spec: GadgetSpec, windows: WindowMode) -> Option<Gadget> {
    let mut options = SearchOptions::new(SearchVariant::Advanced, None);
    options.windows = windows;
    let rungs = search_size_ladder(family, spec, 0, 5, &options).unwrap();
    let last = rungs.last()?;
    match &last.report.outcome {
        SearchOutcome::Found(g) => {
            Some(Gadget::verified_at(spec, family.clone(), g.clone(), Vec::new(), &last.starts).unwrap())
        }
        _ => None,
    }
}

#[test]
fn placed_gadget_survives_a_round_trip() {
    let family = Family::parse("+-+-,----", 3).unwrap();
    let spec = GadgetSpec::Propagator {
        x1: Sign::Minus,
        x2: Sign::Minus,
    };
    // Only reachable with the windows away from the last element.
    assert!(searched(&family, spec, WindowMode::Flush).is_none());
    let g = searched(&family, spec, WindowMode::Any).unwrap();
    assert_eq!(g.starts(), &[1, 2]);
    assert_eq!(g.private_counts(), (0, 1));
    let text = render_gadget(&g);
    assert!(text.contains("var X2 2 3 4"));
    let back = parse_gadget(&text).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.problem(), g.problem());
}

#[test]
fn moved_window_is_rejected() {
    let family = Family::parse("+-+-,----", 3).unwrap();
    let g = searched(
        &family,
        GadgetSpec::Propagator {
            x1: Sign::Minus,
            x2: Sign::Minus,
        },
        WindowMode::Any,
    )
    .unwrap();
    let text = render_gadget(&g);
    // Moving X2 to the flush position breaks the truth table.
    let moved = text.replace("var X2 2 3 4", "var X2 3 4 5");
    assert!(matches!(
        parse_gadget(&moved),
        Err(Error::Verification(_)) | Err(Error::InvalidProblem(_))
    ));
    // Windows must be runs of consecutive elements.
    let gapped = text.replace("var X2 2 3 4", "var X2 2 3 5");
    assert!(matches!(parse_gadget(&gapped), Err(Error::Parse { .. })));
}

#[test]
fn library_directory_loads_and_checks_family() {
    let dir = tempfile::tempdir().unwrap();
    for (i, g) in Library::signotopes().iter().enumerate() {
        save_gadget(g, &dir.path().join(format!("g{i}.gadget"))).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let lib = load_library(dir.path(), &Family::alternating(3)).unwrap();
    assert_eq!(lib, Library::signotopes());
    assert!(load_library(dir.path(), &Family::parse("+-+-", 3).unwrap()).is_err());
}

#[test]
fn builtin_libraries() {
    assert_eq!(Library::builtin(&Family::alternating(3)), Some(Library::signotopes()));
    assert_eq!(Library::builtin(&Family::alternating(4)).unwrap().len(), 3);
    assert!(Library::builtin(&Family::alternating(5)).is_none());
    assert!(Library::builtin(&Family::parse("+-+-", 3).unwrap()).is_none());
}

#[test]
fn composed_parts_verify_on_their_own_elements() {
    for (from, to) in [
        (Sign::Plus, Sign::Plus),
        (Sign::Minus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Minus),
    ] {
        let g = gs_composed(from, to);
        assert_eq!(g.n(), 6);
        for c in g.components() {
            let part = g.component_entries(c).unwrap();
            let p = GadgetProblem::from_spec(c.spec, c.elements.len(), Family::alternating(3)).unwrap();
            assert!(verify_gadget(&part, &p).unwrap().passed(), "{} in {}", c.spec, g.spec());
        }
    }
    // The clause round-trips through text without its components changing.
    assert_eq!(parse_gadget(&render_gadget(&gs_clause())).unwrap(), gs_clause());
}
