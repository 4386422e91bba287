//! The bundled example templates.

use serde::Serialize;

use crate::template::{load_template, QuizTemplate, TemplateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Example {
    pub id: u32,
    pub slug: &'static str,
    pub title: &'static str,
    pub description: &'static str,
    /// The template document as JSON text.
    #[serde(skip)]
    pub source: &'static str,
}

impl Example {
    pub fn template(&self) -> Result<QuizTemplate, TemplateError> {
        load_template(self.source)
    }
}

static EXAMPLES: &[Example] = &[
    Example { id: 1, slug: "01_mean", title: "Mean", description: "Find the mean of a normal sample of size 50 to 100 with random mean and standard deviation, rounded to one digit. The answer is rounded to two digits; the unrounded mean earns 80%.", source: include_str!("../../../corpus/01_mean.quiz.json") },
    Example { id: 2, slug: "02_mean_median", title: "Mean and Median", description: "Same data as the Mean example. Find the mean and the median and decide which of the two is larger.", source: include_str!("../../../corpus/02_mean_median.quiz.json") },
    Example { id: 3, slug: "03_five_number_summary", title: "Five Number Summary", description: "Beta distributed data with random sample size, rounded to 1, 2 or 3 digits. Find the five number summary; questions and answers are laid out as tables.", source: include_str!("../../../corpus/03_five_number_summary.quiz.json") },
    Example { id: 4, slug: "04_one_categorical", title: "One Categorical Variable", description: "Numbers of students per class in a high school. Find the percentages of each class, rounded to one digit.", source: include_str!("../../../corpus/04_one_categorical.quiz.json") },
    Example { id: 5, slug: "05_two_categorical", title: "Two Categorical Variables", description: "A two-way table of smoking status by class. Find the column percentages of smokers, rounded to one digit.", source: include_str!("../../../corpus/05_two_categorical.quiz.json") },
    Example { id: 6, slug: "06_ci_mean", title: "CI for Mean", description: "Data as in the Mean example. Find a confidence interval for the mean at a random confidence level. Wrong rounding and a wrong confidence level earn partial credit.", source: include_str!("../../../corpus/06_ci_mean.quiz.json") },
    Example { id: 7, slug: "07_ci_percentage", title: "CI for Percentage", description: "Given a number of successes and trials, find a 95% confidence interval for the percentage.", source: include_str!("../../../corpus/07_ci_percentage.quiz.json") },
    Example { id: 8, slug: "08_hypothesis_mean", title: "Hypothesis Testing for Mean", description: "Normal data with random mean and standard deviation. Carry out a t test for the mean; the hypotheses are typeset with LaTeX.", source: include_str!("../../../corpus/08_hypothesis_mean.quiz.json") },
    Example { id: 9, slug: "09_sample_size_proportion", title: "Sample Size for Proportion", description: "Find the sample size needed for a confidence interval for a percentage with a given margin of error, using a prior estimate.", source: include_str!("../../../corpus/09_sample_size_proportion.quiz.json") },
    Example { id: 10, slug: "10_correlation_regression", title: "Correlation and Regression", description: "Data generated from a random linear model and shown with a scatterplot. Find the correlation coefficient and the least squares regression equation.", source: include_str!("../../../corpus/10_correlation_regression.quiz.json") },
    Example { id: 11, slug: "11_internet_data", title: "Data downloaded from the internet", description: "Students follow a link to the New York Powerball results, read the data into R and answer questions. The link is text only; generation never goes online.", source: include_str!("../../../corpus/11_internet_data.quiz.json") },
    Example { id: 12, slug: "12_multiple_stories", title: "Multiple Stories", description: "Three stories about a percentage, each with its own plausible sample sizes: a soft drink survey, an election poll and vacation plans.", source: include_str!("../../../corpus/12_multiple_stories.quiz.json") },
    Example { id: 13, slug: "13_r_output", title: "R output", description: "Students read the printed output of t.test (one and two sample), binom.test or a simple regression and answer questions about it.", source: include_str!("../../../corpus/13_r_output.quiz.json") },
    Example { id: 14, slug: "14_linear_system", title: "Pre-calculus: Solving a Linear System", description: "Solve a system of two linear equations whose coefficients are drawn from -3, -2, -1, 1, 2, 3. Zero is excluded to keep the equations aligned.", source: include_str!("../../../corpus/14_linear_system.quiz.json") },
    Example { id: 15, slug: "15_calculus", title: "Calculus: Find Derivative and Integral", description: "Find the derivative of a random polynomial, typed as text with several accepted spellings, and a definite integral computed by numerical integration.", source: include_str!("../../../corpus/15_calculus.quiz.json") },
];

pub fn list_examples() -> &'static [Example] {
    EXAMPLES
}

pub fn example(id: u32) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_consecutive() {
        let ids: Vec<u32> = list_examples().iter().map(|e| e.id).collect();
        assert_eq!(ids, (1..=15).collect::<Vec<_>>());
        assert!(example(16).is_none());
        assert_eq!(example(12).unwrap().title, "Multiple Stories");
    }
}
