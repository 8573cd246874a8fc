// Schema-driven scenario form: every selectable value comes from the
// served schema document, so the form cannot describe an invalid product.

import type { SchemaDoc, ScenarioRequest } from "./api.js";

export function buildCutSelect(schema: SchemaDoc): HTMLSelectElement {
  const select = document.createElement("select");
  select.id = "cut-select";
  for (const cut of schema.cuts) {
    const option = document.createElement("option");
    option.value = cut;
    option.textContent = cut.replace("_", " ");
    select.appendChild(option);
  }
  return select;
}

function levelSelect(id: string, values: Array<string | number>): HTMLSelectElement {
  const select = document.createElement("select");
  select.id = id;
  for (const value of values) {
    const option = document.createElement("option");
    option.value = String(value);
    option.textContent = String(value).replace("_", " ");
    select.appendChild(option);
  }
  return select;
}

export function buildAttributeFields(schema: SchemaDoc, cut: string): HTMLElement {
  const box = document.createElement("div");
  box.id = "attribute-fields";
  for (const attr of schema.attributes) {
    if (!attr.applies_to.includes(cut)) continue;
    const row = document.createElement("label");
    row.className = "field";
    const caption = document.createElement("span");
    caption.textContent = attr.name.replace(/_/g, " ");
    row.appendChild(caption);
    let select: HTMLSelectElement;
    if (attr.kind === "continuous") {
      if (attr.name === "price") {
        select = levelSelect("field-price", schema.price_levels[cut]);
      } else if (attr.name === "weight") {
        select = levelSelect("field-weight", schema.weight_levels[cut]);
        const unit = schema.weight_unit[cut];
        if (unit) caption.textContent += ` (${unit})`;
      } else {
        select = levelSelect(`field-${attr.name}`, attr.design_levels);
        if (attr.unit) caption.textContent += ` (${attr.unit})`;
      }
    } else {
      select = levelSelect(`field-${attr.name}`, attr.levels);
    }
    select.setAttribute("data-attribute", attr.name);
    row.appendChild(select);
    box.appendChild(row);
  }
  return box;
}

export function readScenario(schema: SchemaDoc, root: ParentNode): ScenarioRequest {
  const cut = (root.querySelector("#cut-select") as HTMLSelectElement).value;
  const levels: Record<string, string | number> = {};
  let price = 0;
  let weight = 0;
  for (const select of root.querySelectorAll<HTMLSelectElement>("#attribute-fields select")) {
    const name = select.getAttribute("data-attribute")!;
    const attr = schema.attributes.find((a) => a.name === name)!;
    if (attr.kind === "continuous") {
      const value = Number(select.value);
      if (name === "price") price = value;
      else if (name === "weight") weight = value;
      else levels[name] = value;
    } else {
      levels[name] = select.value;
    }
  }
  return { cut, season: "winter", levels, price, weight };
}
