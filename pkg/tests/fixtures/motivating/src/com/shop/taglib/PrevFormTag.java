package com.shop.taglib;

import javax.servlet.jsp.JspWriter;
import javax.servlet.jsp.tagext.TagSupport;

public class PrevFormTag extends TagSupport {

    private String action;

    public void setAction(String action) {
        this.action = action;
    }

    public int doStartTag() {
        JspWriter out = pageContext.getOut();
        out.print("<form name=\"prevForm\" action=\"cart\" method=\"POST\">");
        return 0;
    }

    public int doEndTag() {
        JspWriter out = pageContext.getOut();
        out.print("</form>");
        return 6;
    }
}
