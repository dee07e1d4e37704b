use crate::purity::PurityReport;

/// Labels each vector with the class of the purity-1 regions containing it,
/// or `None` when no region contains it or containing regions disagree.
pub fn auto_label(report: &PurityReport, unlabeled: &[Vec<f64>]) -> Vec<Option<String>> {
    unlabeled
        .iter()
        .map(|x| {
            let mut label: Option<&str> = None;
            for region in report.pure_regions().filter(|r| r.contains(x)) {
                match label {
                    None => label = Some(&region.dominant_class),
                    Some(l) if l == region.dominant_class => {}
                    Some(_) => return None,
                }
            }
            label.map(str::to_owned)
        })
        .collect()
}
